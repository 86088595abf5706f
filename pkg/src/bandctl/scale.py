"""Closed-form scale functions for each phase, as exponential sums.

For exponential or hyper-exponential demand the Laplace exponent phi is
rational, so the fundamental kernel W solving

    int_0^inf exp(-theta x) W(x) dx = 1 / (phi(theta) - q),   theta > Phi(q)

is a finite sum of exponentials: W(x) = sum_j w_j exp(theta_j x) where the
theta_j are the real roots of phi(theta) = q and w_j = 1/phi'(theta_j).
Every derived function (integrals of W, the Z family) is then exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import RootFindingFailed, ThetaInsideSpectrum
from .model import DemandLaw, ModelConfig

_ROOT_TOL = 1e-12
_INIT_TOL = 1e-10


@dataclass(frozen=True)
class ScaleSet:
    """Exponential-sum representation of W and friends for one phase.

    Immutable; all evaluations are pure and accept scalars or arrays.
    W(x) = 0 for x < 0 and W(0) means the right limit 1/sigma.
    """

    phase: int
    q: float
    sigma: float
    lam: float
    demand: DemandLaw
    exponents: np.ndarray   # distinct real roots of phi(theta) = q, ascending
    weights: np.ndarray     # 1/phi'(theta_j)
    phi_prime0: float

    @property
    def phi_q(self) -> float:
        """Largest (the unique positive) exponent."""
        return float(self.exponents[-1])

    def phi(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = self.sigma * theta - self.lam + self.lam * self.demand.laplace(theta)
        return out if out.shape else float(out)

    # -- W family ---------------------------------------------------------

    def W(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        val = np.exp(xp[..., None] * self.exponents) @ self.weights
        out = np.where(x >= 0, val, 0.0)
        return out if out.shape else float(out)

    def Wbar(self, x):
        """int_0^x W."""
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        val = np.expm1(xp[..., None] * self.exponents) @ (self.weights / self.exponents)
        out = np.where(x >= 0, val, 0.0)
        return out if out.shape else float(out)

    def Wbarbar(self, x):
        """int_0^x Wbar."""
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        th = self.exponents
        val = np.expm1(xp[..., None] * th) @ (self.weights / th**2) - xp * float(
            np.sum(self.weights / th)
        )
        out = np.where(x >= 0, val, 0.0)
        return out if out.shape else float(out)

    # -- Z family ---------------------------------------------------------

    def Z(self, x):
        """1 + q * Wbar(x); equals 1 for x <= 0."""
        return 1.0 + self.q * self.Wbar(x)

    def Zbar(self, x):
        """int_0^x Z = x + q * Wbarbar(x); equals x for x <= 0."""
        x = np.asarray(x, dtype=float)
        out = x + self.q * self.Wbarbar(x)
        return out if out.shape else float(out)

    def Z_theta(self, x, theta: float):
        """exp(theta x) * (1 + (q - phi(theta)) int_0^x exp(-theta y) W(y) dy).

        Reduces to Z(x) at theta = 0 and to exp(theta x) when theta is one of
        the exponents (there q = phi(theta)).  For x < 0 returns exp(theta x).
        """
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        diff = self.exponents - theta
        small = np.abs(diff) < 1e-12
        safe = np.where(small, 1.0, diff)
        terms = np.where(
            small,
            xp[..., None] * np.ones_like(diff),
            np.expm1(xp[..., None] * safe) / safe,
        )
        inner = terms @ self.weights
        val = np.exp(theta * xp) * (1.0 + (self.q - self.phi(theta)) * inner)
        out = np.where(x >= 0, val, np.exp(theta * x))
        return out if out.shape else float(out)


def build_scale(model: ModelConfig, phase: int) -> ScaleSet:
    """Solve phi(theta) = q exactly via its polynomial form.

    Multiplying phi(theta) - q by prod_k (mu_k + theta) gives a degree-(k+1)
    polynomial whose roots are the exponents; they are real and distinct for
    exponential mixtures.  Complex or (near-)repeated roots are rejected.
    """
    d = model.demand
    sigma = model.sigma(phase)
    mus = np.asarray(d.rates, dtype=float)
    ws = np.asarray(d.weights, dtype=float)

    poly = np.array([-(model.lam + model.q), sigma])
    for mu in mus:
        poly = npoly.polymul(poly, np.array([mu, 1.0]))
    for k, mu in enumerate(mus):
        rest = np.array([1.0])
        for m, mu2 in enumerate(mus):
            if m != k:
                rest = npoly.polymul(rest, np.array([mu2, 1.0]))
        poly = npoly.polyadd(poly, model.lam * ws[k] * mus[k] * rest)

    roots = npoly.polyroots(poly)
    scale_mag = max(1.0, float(np.max(np.abs(roots))))
    if np.any(np.abs(roots.imag) > 1e-9 * scale_mag):
        raise RootFindingFailed(f"complex roots for phase {phase}: {roots}")
    roots = np.sort(roots.real)
    if len(roots) > 1 and np.min(np.diff(roots)) < _ROOT_TOL * scale_mag:
        raise RootFindingFailed(f"repeated roots for phase {phase}: {roots}")
    if np.sum(roots > 0) != 1:
        raise RootFindingFailed(f"expected exactly one positive root, got {roots}")

    # phi'(theta) = sigma + lam * d/dtheta L_Y(theta)
    phi_prime = sigma + model.lam * np.asarray(
        [d.laplace_deriv(r) for r in roots], dtype=float
    )
    weights = 1.0 / phi_prime

    resid = np.abs(model.sigma(phase) * roots - model.lam + model.lam * d.laplace(roots) - model.q)
    if np.any(resid > 1e-8 * (1 + abs(model.q))):
        raise RootFindingFailed(f"roots do not satisfy phi(theta) = q: residual {resid}")
    if abs(float(np.sum(weights)) - 1.0 / sigma) > _INIT_TOL:
        raise RootFindingFailed("weights do not reproduce W(0+) = 1/sigma")

    return ScaleSet(
        phase=phase,
        q=model.q,
        sigma=sigma,
        lam=model.lam,
        demand=d,
        exponents=roots,
        weights=weights,
        phi_prime0=float(sigma + model.lam * d.laplace_deriv(0.0)),
    )


def eval_W_family(scale: ScaleSet, x):
    """(W, int W, double integral of W) at x; zeros for x < 0."""
    return scale.W(x), scale.Wbar(x), scale.Wbarbar(x)


def eval_Z_family(scale: ScaleSet, x, theta: float | None = None):
    """(Z, Zbar, Z(x, theta)); the last entry is Z(x) when theta is omitted."""
    z = scale.Z(x)
    zb = scale.Zbar(x)
    zt = z if theta is None else scale.Z_theta(x, theta)
    return z, zb, zt


def check_laplace_identity(scale: ScaleSet, theta: float) -> float:
    """Residual of the defining transform at theta > Phi(q).

    The truncated transform int_0^T exp(-theta x) W(x) dx is evaluated in
    closed form with T chosen so the dropped tail is below 1e-13 per term;
    the residual against 1/(phi(theta) - q) is returned.
    """
    if theta <= scale.phi_q + 1e-7:
        raise ThetaInsideSpectrum(
            f"theta = {theta} must exceed the largest exponent {scale.phi_q}"
        )
    gaps = theta - scale.exponents
    # tail of term j beyond T is |w_j| exp(-gap_j T)/gap_j
    T = float(np.max(np.log(np.abs(scale.weights) / (gaps * 1e-13) + 1.0) / gaps))
    T = max(T, 1.0)
    integral = float(np.sum(scale.weights * -np.expm1(-gaps * T) / gaps))
    target = 1.0 / (scale.phi(theta) - scale.q)
    return abs(integral - target)
