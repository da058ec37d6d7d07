"""Central finite-difference validation of analytic gradients.

The harness never looks at how a gradient was derived: it reruns the forward
map with perturbed parameters and compares the measured slope against the
recorded analytic value, so it stays an independent oracle for every layer.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .layers import Parameter
from .ops import NumericError


def grad_check(
    loss_fn: Callable[[], float],
    params: Sequence[Parameter],
    probe_count: int = 20,
    epsilon: float = 1e-3,
    rng: np.random.Generator | None = None,
    fd_loss_fn: Callable[[], float] | None = None,
    fd_params: Sequence[Parameter] | None = None,
    probe_guard: Callable[[], object] | None = None,
    min_signal: float = 0.0,
) -> float:
    """Max relative error between analytic and finite-difference gradients.

    loss_fn must be deterministic given the parameter values, return a scalar,
    and accumulate gradients into each Parameter's .grad.  probe_count
    coordinates are sampled across all parameters; each is probed with a
    central difference (f(t+e) - f(t-e)) / 2e.  Relative error uses
    max(|analytic|, |numeric|, 1e-8) as the denominator.

    A difference quotient evaluated in single precision is mostly rounding
    noise, so when checking a float32 computation the caller passes
    fd_loss_fn/fd_params: a float64 twin of the same function holding
    bit-identical (exactly upcast) values.  Probes then perturb the twin,
    keeping the analytic side in the dtype under test while the oracle stays
    well-conditioned.

    probe_guard, when given, returns a fingerprint of the piecewise-linear
    region the last evaluation landed in (e.g. relu sign patterns).  A probe
    whose two evaluations land in different regions straddles a kink, where
    the difference quotient measures no derivative at all; such probes are
    discarded and redrawn.

    min_signal, when positive, likewise discards probes where both the
    analytic and the numeric value sit below that magnitude.  A coordinate
    whose true gradient is exactly zero (a conv bias feeding a batchnorm,
    say) reads as cancellation dust on the analytic side and roundoff on the
    FD side; comparing two numbers below measurement resolution certifies
    nothing either way.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if fd_loss_fn is None:
        fd_loss_fn = loss_fn
    if fd_params is None:
        fd_params = params

    for p in params:
        p.zero_grad()
    base = float(loss_fn())
    if not np.isfinite(base):
        raise NumericError("loss is non-finite at the evaluation point")
    analytic = [p.grad.copy() for p in params]

    sizes = np.array([p.value.size for p in params])
    total = int(sizes.sum())
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    candidates = rng.permutation(total)

    max_err = 0.0
    accepted = 0
    for flat_idx in candidates:
        if accepted >= probe_count:
            break
        pi = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        local = int(flat_idx - offsets[pi])
        flat = fd_params[pi].value.reshape(-1)
        orig = flat[local]

        flat[local] = orig + epsilon
        f_plus = float(fd_loss_fn())
        guard_plus = probe_guard() if probe_guard is not None else None
        flat[local] = orig - epsilon
        f_minus = float(fd_loss_fn())
        guard_minus = probe_guard() if probe_guard is not None else None
        flat[local] = orig

        if probe_guard is not None and guard_plus != guard_minus:
            continue  # kink inside [t-e, t+e]: no derivative to compare
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError("loss is non-finite at a probe point")
        numeric = (f_plus - f_minus) / (2.0 * epsilon)
        a = float(analytic[pi].reshape(-1)[local])
        if max(abs(a), abs(numeric)) < min_signal:
            continue  # both sides below resolution: nothing to compare
        denom = max(abs(a), abs(numeric), 1e-8)
        err = abs(a - numeric) / denom
        max_err = max(max_err, err)
        accepted += 1

    # Probing may dirty the analytic side's grads; restore the recorded ones.
    for p, g in zip(params, analytic):
        p.grad[...] = g
    return max_err
