"""Damage material model: effective energies, incremental potential, stress, tangent.

The model couples a hyperelastic effective strain energy (St. Venant-Kirchhoff
or compressible Neo-Hooke) with a discontinuous scalar damage law.  The
internal variable beta is the running maximum of the effective energy; the
incremental potential condenses it out analytically per pseudo-time step.

All evaluation routines accept deformation gradients of shape (..., d, d)
with d in {1, 2, 3} and broadcast over leading axes.  For d < 3 the gradient
is embedded as plane strain (unit out-of-plane stretch, no out-of-plane
shear), so the same closed-form expressions hold in every dimension.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveJacobian


class Model(enum.Enum):
    STVK = "stvk"
    NEOHOOKE = "neohooke"


@dataclass(frozen=True)
class MaterialSpec:
    """Damage-model parameters.

    Parameters
    ----------
    model : Model
        Effective strain energy choice.
    lam, mu : float
        Lame parameters (stress units).
    d0 : float
        Damage saturation parameter (energy units).
    dinf : float
        Asymptotic damage limit, 0 < dinf < 1.
    """

    model: Model
    lam: float
    mu: float
    d0: float
    dinf: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.d0 > 0:
            raise ValueError(f"d0 must be positive, got {self.d0}")
        if not 0 < self.dinf < 1:
            raise ValueError(f"dinf must lie in (0, 1), got {self.dinf}")


@dataclass(frozen=True)
class HistoryState:
    """Internal state carried between pseudo-time steps.

    beta_k is the internal damage-driving variable of the previous step and
    f_k the previous-step deformation gradient.
    """

    beta_k: float
    f_k: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f_k", np.asarray(self.f_k, dtype=float))
        if not self.beta_k >= 0:
            raise ValueError(f"beta_k must be nonnegative, got {self.beta_k}")


def identity_history(d: int) -> HistoryState:
    """Virgin state: undeformed previous step, no accumulated damage drive."""
    return HistoryState(beta_k=0.0, f_k=np.eye(d))


def _det(f: np.ndarray) -> np.ndarray:
    d = f.shape[-1]
    if d == 1:
        return f[..., 0, 0]
    if d == 2:
        return f[..., 0, 0] * f[..., 1, 1] - f[..., 0, 1] * f[..., 1, 0]
    return np.linalg.det(f)


def effective_energy(f, spec: MaterialSpec, *, invalid: str = "raise"):
    """Effective strain energy psi0 of the undamaged model.

    ``invalid`` controls behaviour at det(F) <= 0 for the Neo-Hooke model:
    "raise" raises :class:`NonPositiveJacobian`, "inf" returns +inf at the
    offending entries (lattice-sentinel convention).
    """
    f = np.asarray(f, dtype=float)
    d = f.shape[-1]
    c = np.einsum("...ki,...kj->...ij", f, f)
    i1 = np.einsum("...ii->...", c) + (3 - d)
    if spec.model is Model.NEOHOOKE:
        j = _det(f)
        bad = j <= 0
        if np.any(bad):
            if invalid == "raise":
                raise NonPositiveJacobian("det(F) <= 0 in Neo-Hooke evaluation")
            j = np.where(bad, 1.0, j)
        lnj = np.log(j)
        psi = 0.5 * spec.mu * (i1 - 3.0) - spec.mu * lnj + 0.5 * spec.lam * lnj**2
        if np.any(bad):
            psi = np.where(bad, np.inf, psi)
        return psi if psi.ndim else float(psi)
    # STVK via invariants of the embedded right Cauchy-Green tensor
    trc2 = np.einsum("...ij,...ji->...", c, c) + (3 - d)
    i2 = 0.5 * (i1**2 - trc2)
    psi = spec.lam / 8.0 * (i1 - 3.0) ** 2 + spec.mu / 4.0 * (
        i1**2 - 2.0 * i1 - 2.0 * i2 + 3.0
    )
    return psi if psi.ndim else float(psi)


def damage_value(beta, spec: MaterialSpec):
    """Damage function D(beta) = dinf * (1 - exp(-beta/d0)), beta >= 0."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise ValueError("beta must be nonnegative")
    out = spec.dinf * (1.0 - np.exp(-beta / spec.d0))
    return out if out.ndim else float(out)


def damage_antiderivative(beta, spec: MaterialSpec):
    """Closed-form antiderivative of D with the D_bar(0) = 0 convention."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise ValueError("beta must be nonnegative")
    out = spec.dinf * (beta + spec.d0 * (np.exp(-beta / spec.d0) - 1.0))
    return out if out.ndim else float(out)


def incremental_potential(f, hist: HistoryState, spec: MaterialSpec, *, invalid="raise"):
    """Incremental stress potential W(F) for one pseudo-time step.

    The internal variable update beta = max(beta_k, psi0(F)) is condensed
    out; W vanishes at F = f_k.
    """
    psi = np.asarray(effective_energy(f, spec, invalid=invalid))
    psi_k = effective_energy(hist.f_k, spec)
    beta_k = hist.beta_k
    beta = np.maximum(beta_k, psi)
    finite = np.isfinite(psi)
    beta_safe = np.where(finite, beta, beta_k)
    dmg = damage_value(beta_safe, spec)
    dmg_k = damage_value(beta_k, spec)
    dbar = damage_antiderivative(beta_safe, spec)
    dbar_k = damage_antiderivative(beta_k, spec)
    w = (
        (1.0 - dmg) * psi
        - (1.0 - dmg_k) * psi_k
        + beta_safe * dmg
        - beta_k * dmg_k
        - dbar
        + dbar_k
    )
    w = np.where(finite, w, np.inf)
    return w if w.ndim else float(w)


def _psi0_stress(f, spec: MaterialSpec):
    """First derivative of the effective energy w.r.t. the in-plane F."""
    f = np.asarray(f, dtype=float)
    d = f.shape[-1]
    eye = np.eye(d)
    if spec.model is Model.NEOHOOKE:
        j = _det(f)
        if np.any(j <= 0):
            raise NonPositiveJacobian("det(F) <= 0 in Neo-Hooke stress")
        finvt = np.swapaxes(np.linalg.inv(f), -1, -2)
        lnj = np.log(j)
        return spec.mu * f + (spec.lam * lnj - spec.mu)[..., None, None] * finvt
    c = np.einsum("...ki,...kj->...ij", f, f)
    e = 0.5 * (c - eye)
    tre = np.einsum("...ii->...", e)
    s = spec.lam * tre[..., None, None] * eye + 2.0 * spec.mu * e
    return np.einsum("...ik,...kj->...ij", f, s)


def _psi0_tangent(f, spec: MaterialSpec):
    """Second derivative of the effective energy, shape (..., d, d, d, d)."""
    f = np.asarray(f, dtype=float)
    d = f.shape[-1]
    eye = np.eye(d)
    if spec.model is Model.NEOHOOKE:
        j = _det(f)
        if np.any(j <= 0):
            raise NonPositiveJacobian("det(F) <= 0 in Neo-Hooke tangent")
        finvt = np.swapaxes(np.linalg.inv(f), -1, -2)
        lnj = np.log(j)
        t = spec.mu * np.einsum("ik,JL->iJkL", eye, eye)
        t = t + spec.lam * np.einsum("...iJ,...kL->...iJkL", finvt, finvt)
        t = t + (spec.mu - spec.lam * lnj)[..., None, None, None, None] * np.einsum(
            "...iL,...kJ->...iJkL", finvt, finvt
        )
        return t
    c = np.einsum("...ki,...kj->...ij", f, f)
    e = 0.5 * (c - eye)
    tre = np.einsum("...ii->...", e)
    s = spec.lam * tre[..., None, None] * eye + 2.0 * spec.mu * e
    b = np.einsum("...ik,...jk->...ij", f, f)
    t = np.einsum("ik,...JL->...iJkL", eye, s)
    t = t + spec.lam * np.einsum("...iJ,...kL->...iJkL", f, f)
    t = t + spec.mu * np.einsum("...iL,...kJ->...iJkL", f, f)
    t = t + spec.mu * np.einsum("JL,...ik->...iJkL", eye, b)
    return t


@dataclass(frozen=True)
class StressTangentPair:
    """Energy, first Piola-Kirchhoff stress, and nominal tangent moduli."""

    energy: float
    stress: np.ndarray
    tangent: np.ndarray


def stress_and_tangent(f, hist: HistoryState, spec: MaterialSpec) -> StressTangentPair:
    """Analytic W, P = dW/dF, and A = d2W/dF2 of the incremental potential.

    At the kink psi0(F) = beta_k the evolving branch (beta = psi0) is used,
    matching the loading direction in which the solvers query the model.
    """
    f = np.asarray(f, dtype=float)
    psi = np.asarray(effective_energy(f, spec))
    w = np.asarray(incremental_potential(f, hist, spec))
    pf = _psi0_stress(f, spec)
    af = _psi0_tangent(f, spec)
    evolving = psi >= hist.beta_k
    beta = np.maximum(hist.beta_k, psi)
    dmg = np.asarray(damage_value(beta, spec))
    dmg_k = damage_value(hist.beta_k, spec)
    factor = np.where(evolving, 1.0 - dmg, 1.0 - dmg_k)
    stress = factor[..., None, None] * pf
    dprime = (spec.dinf / spec.d0) * np.exp(-np.asarray(beta) / spec.d0)
    curv = np.where(evolving, dprime, 0.0)
    tangent = factor[..., None, None, None, None] * af - curv[
        ..., None, None, None, None
    ] * np.einsum("...iJ,...kL->...iJkL", pf, pf)
    if f.ndim == 2:
        return StressTangentPair(float(w), stress, tangent)
    return StressTangentPair(w, stress, tangent)
