"""Linearization of the order-2k invariants at space-form backgrounds.

At a round background the first variation of the total order-2k curvature
invariant collapses, for axisymmetric conformal directions, to a multiple of
the shifted Laplacian (Laplacian - n mu). The coefficients are explicit in
(n, k, mu) and are exposed here, together with a finite-difference harness
that verifies the closed forms against the nonlinear curvature pipelines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spaceform import (
    ConformalMetric,
    LatitudeField,
    SpaceForm,
    _gb_values,
    field_from_modes,
    field_from_values,
    gb_field,
    laplacian,
    sup_norm,
)

__all__ = [
    "LinearizationConstants",
    "constants",
    "shifted_laplacian",
    "conformal_linearization",
    "full_linearization",
    "fd_verify",
    "NondegeneracyViolated",
    "LinearFunctional",
    "max_order",
    "GeneralizedConstants",
    "generalized_constants",
    "generalized_linearization",
    "constancy_diagnostic",
]


class NondegeneracyViolated(ValueError):
    """The combined linearization coefficient vanishes (or nearly does), so
    the implicit-function argument behind the solver does not apply."""


@dataclass(frozen=True)
class LinearizationConstants:
    """Closed-form coefficients at the (n, mu) background, order k.

    base_coefficient scales the pointwise invariant of the background,
    tensor_coefficient multiplies the general metric-direction combination,
    conformal_coefficient = (n - 1) * tensor_coefficient multiplies the
    shifted Laplacian in conformal directions.
    """

    n: int
    k: int
    mu: float
    base_coefficient: float
    tensor_coefficient: float
    conformal_coefficient: float


def max_order(n: int) -> int:
    """Largest k with 2k < n."""
    return (n - 1) // 2


def constants(n: int, k: int, mu: float) -> LinearizationConstants:
    if n < 3:
        raise ValueError(f"dimension must be at least 3, got {n}")
    if k < 1 or 2 * k >= n:
        raise ValueError(f"order k={k} must satisfy 1 <= k and 2k < n (n={n})")
    if mu == 0:
        raise ValueError("background curvature must be nonzero")
    base = math.factorial(2 * k) * math.factorial(n - 3) / (2**k * math.factorial(n - 2 * k))
    tensor = (n - 2) * k * base * float(mu) ** (k - 1) / math.factorial(2 * k)
    return LinearizationConstants(
        n=n,
        k=k,
        mu=float(mu),
        base_coefficient=base,
        tensor_coefficient=tensor,
        conformal_coefficient=(n - 1) * tensor,
    )


def shifted_laplacian(sf: SpaceForm, field: LatitudeField) -> LatitudeField:
    """(Laplacian - n mu) applied to an axisymmetric field."""
    lap = laplacian(sf, field)
    modes = lap.modes - sf.n * sf.curvature * field.modes
    return field_from_modes(field.basis, modes, parity=field.parity)


def conformal_linearization(sf: SpaceForm, field: LatitudeField, k: int) -> LatitudeField:
    """Derivative of the order-2k invariant in the direction of a conformal
    perturbation f (metric direction 2 f g contributes twice this)."""
    coeff = constants(sf.n, k, sf.curvature).conformal_coefficient
    shifted = shifted_laplacian(sf, field)
    return field_from_modes(field.basis, coeff * shifted.modes, parity=field.parity)


def full_linearization(
    sf: SpaceForm, tr_h: LatitudeField, div_div_h: LatitudeField, k: int
) -> LatitudeField:
    """Derivative in a general direction h, given its trace and double
    divergence as axisymmetric fields.

    div_div_h uses the convention div_div(u g) = -Laplacian(u) with the
    geometer-sign Laplacian; under it, h = 2 f g reproduces twice
    conformal_linearization(sf, f, k).
    """
    if tr_h.basis is not div_div_h.basis and (
        tr_h.basis.n != div_div_h.basis.n
        or tr_h.basis.max_mode != div_div_h.basis.max_mode
        or tr_h.basis.x.size != div_div_h.basis.x.size
    ):
        raise ValueError("trace and double-divergence fields live on different bases")
    coeff = constants(sf.n, k, sf.curvature).tensor_coefficient
    lap = laplacian(sf, tr_h)
    modes = coeff * (lap.modes + div_div_h.modes - (sf.n - 1) * sf.curvature * tr_h.modes)
    parity = tr_h.parity if tr_h.parity == div_div_h.parity else "any"
    return field_from_modes(tr_h.basis, modes, parity=parity)


def fd_verify(
    sf: SpaceForm,
    field: LatitudeField,
    k: int,
    eps: float = 1e-3,
    pipeline: str = "warped",
) -> tuple[LatitudeField, LatitudeField, float]:
    """Central-difference check of the conformal linearization.

    Evaluates the order-2k invariant of e^{+-2 eps f} g_mu, forms the
    symmetric difference quotient, and compares with the closed form for the
    path derivative (the direction is h = 2 f g, hence twice the conformal
    linearization). Returns (fd, exact, sup relative error).
    """
    if eps <= 0:
        raise ValueError("finite-difference step must be positive")
    basis = field.basis
    vals = np.stack([eps * field.values, -eps * field.values])
    dv = np.stack([eps * field.dvalues, -eps * field.dvalues])
    ddv = np.stack([eps * field.ddvalues, -eps * field.ddvalues])
    two_sided = _gb_values(sf.n, sf.curvature, k, basis, vals, dv, ddv, pipeline)
    fd_vals = (two_sided[0] - two_sided[1]) / (2.0 * eps)
    fd = field_from_values(basis, fd_vals, parity=field.parity)
    lin = conformal_linearization(sf, field, k)
    exact = field_from_modes(basis, 2.0 * lin.modes, parity=field.parity)
    denom = sup_norm(exact)
    if denom == 0.0:
        raise ValueError("exact linearization vanishes; relative error undefined")
    relerr = float(np.abs(fd.values - exact.values).max() / denom)
    return fd, exact, relerr


# ---------------------------------------------------------------------------
# Linear combinations of invariants of several orders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearFunctional:
    """Linear combination sum_k coefficients[k-1] * (order-2k invariant)."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("functional needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("functional coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(range(1, len(self.coefficients) + 1))


@dataclass(frozen=True)
class GeneralizedConstants:
    n: int
    mu: float
    coefficients: tuple[float, ...]
    per_order: tuple[LinearizationConstants, ...]
    tensor_coefficient: float
    conformal_coefficient: float


def generalized_constants(n: int, mu: float, functional: LinearFunctional) -> GeneralizedConstants:
    """Aggregate linearization coefficients of a combined functional.

    Raises NondegeneracyViolated when the combination cancels: the combined
    coefficient is negligible against the scale of its terms.
    """
    if len(functional.coefficients) > max_order(n):
        raise ValueError(
            f"functional has {len(functional.coefficients)} orders but n={n} admits only {max_order(n)}"
        )
    per_order = tuple(constants(n, k, mu) for k in functional.orders)
    combined = sum(c * pc.tensor_coefficient for c, pc in zip(functional.coefficients, per_order))
    scale = sum(abs(c * pc.tensor_coefficient) for c, pc in zip(functional.coefficients, per_order))
    if scale == 0.0 or abs(combined) < 1e-12 * scale:
        raise NondegeneracyViolated(
            f"combined linearization coefficient {combined:.3e} is degenerate (term scale {scale:.3e})"
        )
    return GeneralizedConstants(
        n=n,
        mu=float(mu),
        coefficients=functional.coefficients,
        per_order=per_order,
        tensor_coefficient=float(combined),
        conformal_coefficient=float((n - 1) * combined),
    )


def generalized_linearization(
    sf: SpaceForm, field: LatitudeField, functional: LinearFunctional
) -> LatitudeField:
    """Conformal-direction derivative of the combined functional."""
    gc = generalized_constants(sf.n, sf.curvature, functional)
    shifted = shifted_laplacian(sf, field)
    return field_from_modes(field.basis, gc.conformal_coefficient * shifted.modes, parity=field.parity)


def constancy_diagnostic(cm: ConformalMetric, k: int, pipeline: str = "warped") -> LatitudeField:
    """Mean-free conformal Laplacian of the order-2k invariant field.

    For a metric solving the constant-invariant equation the invariant is
    constant, so this diagnostic vanishes (to discretization accuracy); at a
    generic conformal factor it is order one. The conformal Laplacian of
    e^{2 phi} g acts on axisymmetric u as
    e^{-2 phi} (Laplacian_g u - (n - 2) mu phi' u').
    """
    sf = cm.base
    phi = cm.phi
    field = gb_field(cm, k, pipeline)
    lap = laplacian(sf, field)
    hat_vals = np.exp(-2.0 * phi.values) * (
        lap.values - (sf.n - 2) * sf.curvature * phi.dvalues * field.dvalues
    )
    mean = float(phi.basis.weights @ hat_vals) / float(phi.basis.weights.sum())
    parity = "even" if phi.parity == "even" else "any"
    return field_from_values(phi.basis, hat_vals - mean, parity=parity)
