import logging
import math
from typing import Callable, Iterable, Mapping, Optional

import numpy as np
import torch
from pydantic import BaseModel, Field
from tabulate import tabulate
from torch import Tensor

from ..errors import GradCheckError

logger = logging.getLogger(__name__)


class TensorCheck(BaseModel):
    name: str
    shape: list[int]
    checked: int = Field(description="Number of entries perturbed with finite differences.")
    max_abs_grad: float
    max_rel_error: float
    passed: bool


class GradCheckReport(BaseModel):
    eps: float
    tolerance: float
    checks: list[TensorCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_rel_error(self) -> float:
        return max((c.max_rel_error for c in self.checks), default=0.0)

    def failures(self) -> list[TensorCheck]:
        return [c for c in self.checks if not c.passed]

    def to_table(self) -> str:
        rows = [
            [
                c.name,
                "x".join(str(s) for s in c.shape) or "scalar",
                c.checked,
                f"{c.max_abs_grad:.3e}",
                f"{c.max_rel_error:.3e}",
                "ok" if c.passed else "FAIL",
            ]
            for c in self.checks
        ]
        return tabulate(
            rows,
            headers=["tensor", "shape", "checked", "max |grad|", "max rel err", ""],
        )


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor] | Iterable[tuple[str, Tensor]],
    eps: float = 1e-6,
    tolerance: float = 1e-4,
    max_entries: Optional[int] = None,
    scale_floor: float = 1e-3,
    seed: int = 0,
) -> GradCheckReport:
    """Compare autograd gradients with central finite differences.

    The relative error of an entry is ``|a - n| / max(|a|, |n|, scale_floor)``
    where ``a`` is the analytic and ``n`` the numeric derivative.

    Args:
        loss_fn: Deterministic closure returning a scalar loss; it must not
            call ``backward`` itself.
        params: Named leaf tensors to perturb.
        eps: Finite-difference step.
        tolerance: Maximum admissible relative error per tensor.
        max_entries: Perturb at most this many randomly chosen entries per
            tensor; ``None`` perturbs every entry.
        scale_floor: Lower bound of the error denominator.
        seed: Seed for the entry sampling.

    Returns:
        A report with one row per tensor.
    """
    named = list(params.items()) if isinstance(params, Mapping) else list(params)
    tensors = [p for _, p in named]
    loss = loss_fn()
    if not torch.isfinite(loss).all():
        raise GradCheckError("Loss is non-finite at the unperturbed parameters")
    grads = torch.autograd.grad(loss, tensors, allow_unused=True)
    sampler = np.random.default_rng(seed)

    report = GradCheckReport(eps=eps, tolerance=tolerance)
    for (name, param), grad in zip(named, grads, strict=True):
        analytic = (
            torch.zeros_like(param) if grad is None else grad.detach()
        ).reshape(-1)
        flat = param.detach().view(-1)
        n = flat.numel()
        if max_entries is None or n <= max_entries:
            indices = range(n)
        else:
            indices = sorted(sampler.choice(n, size=max_entries, replace=False).tolist())

        max_err = 0.0
        checked = 0
        with torch.no_grad():
            for i in indices:
                old = flat[i].item()
                flat[i] = old + eps
                plus = loss_fn().item()
                flat[i] = old - eps
                minus = loss_fn().item()
                flat[i] = old
                if not (math.isfinite(plus) and math.isfinite(minus)):
                    raise GradCheckError(
                        f"Loss became non-finite while probing {name}[{i}]"
                    )
                numeric = (plus - minus) / (2 * eps)
                a = analytic[i].item()
                err = abs(a - numeric) / max(abs(a), abs(numeric), scale_floor)
                max_err = max(max_err, err)
                checked += 1

        check = TensorCheck(
            name=name,
            shape=list(param.shape),
            checked=checked,
            max_abs_grad=analytic.abs().max().item() if n else 0.0,
            max_rel_error=max_err,
            passed=max_err < tolerance,
        )
        if not check.passed:
            logger.warning(
                f"Gradient mismatch in {name}: max relative error {max_err:.3e}"
            )
        report.checks.append(check)
    return report
