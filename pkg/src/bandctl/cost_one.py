"""Discounted holding, shortage and switching costs for one-band policies.

A type-one band keeps phase 2 on (y2, b), switches 2 -> 1 on [0, y2],
switches 1 -> 2 on [y1, b), and after a restart from capacity picks phase 1
iff the landing point is at or below y3.  The two-threshold policy is the
special case y3 = y2.

Each of the three cost kinds decomposes as  value(x) = base(x) + slope(x) *
level_b_value,  with the level-b scalar solved from a one-dimensional linear
fixed point assembled by quadrature over the demand density.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import FixedPointNotContractive, OutOfBand, ValidationError
from .model import ModelConfig
from .passage import Omega2, integrate, integrate_rows
from .scale import build_scale

_MIN_GAP = 1e-9


@dataclass(frozen=True)
class BandOne:
    """Thresholds 0 <= y2 <= y3 < y1 < b; Doshi policies have y3 = y2."""

    y2: float
    y3: float
    y1: float

    def check(self, b: float) -> "BandOne":
        if not (0 <= self.y2 <= self.y3 < self.y1 < b):
            raise ValidationError(f"band ordering violated: {self} with b={b}")
        if self.y1 - self.y3 < _MIN_GAP:
            raise ValidationError("y1 must exceed y3 by at least 1e-9")
        return self

    @property
    def is_doshi(self) -> bool:
        return self.y3 == self.y2


@dataclass(frozen=True)
class BandTwo:
    """Type-two thresholds 0 <= y2 <= y3 < y1 < y4 < b.

    Phase 1 switches to 2 only on [y1, y4]; above y4 it keeps producing
    until capacity.
    """

    y2: float
    y3: float
    y1: float
    y4: float

    def check(self, b: float) -> "BandTwo":
        if not (0 <= self.y2 <= self.y3 < self.y1 < self.y4 < b):
            raise ValidationError(f"band ordering violated: {self} with b={b}")
        if self.y1 - self.y3 < _MIN_GAP or self.y4 - self.y1 < _MIN_GAP:
            raise ValidationError("thresholds must be separated by at least 1e-9")
        return self

    def lower(self) -> BandOne:
        return BandOne(self.y2, self.y3, self.y1)


class TypeOneAssembly:
    """All closed-form machinery for one (model, band) pair.

    Construction solves the three level-b fixed points; afterwards every
    exposed function is a pure vectorized evaluation.
    """

    def __init__(self, model: ModelConfig, band: BandOne):
        band.check(model.b)
        self.model = model
        self.band = band
        m = model
        y2, y1, b = band.y2, band.y1, m.b
        self.s1 = build_scale(m, 1)
        self.s2 = build_scale(m, 2)
        s1, s2 = self.s1, self.s2
        self.om = Omega2(s1, s2, y2, b)
        lam = m.lam
        self._mus = np.asarray(m.demand.rates, dtype=float)
        self._ws = np.asarray(m.demand.weights, dtype=float)

        self.Z1y1 = s1.Z(y1)
        self.W1y1 = s1.W(y1)
        self.Wbb1y1 = s1.Wbarbar(y1)
        self.Z2band = s2.Z(b - y2)
        self.Zb2band = s2.Zbar(b - y2)
        self.Wb2band = s2.Wbar(b - y2)

        # shortage building blocks: P1 = int_0^{y1} W1(y1-z) * lam * ptail(z) dz
        p0, p1 = m.penalty.p0, m.penalty.p1
        self._ptail = lambda z: m.demand.penalty_tail(z, p0, p1)
        self.P1 = float(integrate(lambda z: s1.W(y1 - z) * lam * self._ptail(z), 0.0, y1))
        self.S1xy0 = self.P1 / self.Z1y1  # value of the renewal sum started at 0

        # demand-transform constants for the phase-2 landing integrals
        self._cS = self._against_exp(self.S1xy, 0.0, y2)
        self._cZ = self._against_exp(s1.Z, 0.0, y2)
        # _B2[k] = int_{y2}^b W2(b-z) exp(-mu_k z) dz
        self._B2 = np.asarray(
            integrate(lambda z: s2.W(b - z) * np.exp(-self._mus[:, None] * z), y2, b),
            dtype=float,
        )

        # scalars at y1 feeding the linear representations
        up_y1 = self.om.up(y1)
        self.up_y1 = float(up_y1)
        self.down_y1 = float(s2.Z(y1 - y2) - up_y1 * self.Z2band)
        self.omZ_y1 = float(self.om.apply_Z1(np.asarray(y1)))
        self.r = self.omZ_y1 / self.Z1y1
        self.denom = self.Z1y1 - self.omZ_y1
        if not (0 <= self.r < 1):
            raise FixedPointNotContractive(f"phase-2 return factor r={self.r} outside [0,1)")
        self.A_y1 = float(self._A(np.asarray([y1]))[0])

        g_y1 = float(self._gamma_base(np.asarray([y1]))[0])
        mu_y1 = float(self._mu_base(np.asarray([y1]))[0])
        if not (0 <= g_y1 < 1):
            raise FixedPointNotContractive(f"shortage renewal factor {g_y1} outside [0,1)")
        self._gamma_y1 = g_y1
        self._mu_y1 = mu_y1
        self.alpha2_y1 = self.up_y1 * self.Z1y1 / self.denom
        self.beta2_y1 = self.A_y1 * self.Z1y1 / self.denom
        self.mu2_y1 = mu_y1 / (1.0 - g_y1)
        self.gamma2_y1 = self.up_y1 / (1.0 - g_y1)
        k = m.switching
        self._k2num = k.k20 * self.up_y1 + k.k12 * self.r + k.k21 * self.down_y1
        self.omega2_y1 = self._k2num / (1.0 - self.r)
        self.delta2_y1 = self.up_y1 / (1.0 - self.r)

        # level-b fixed points H0, S0, K0
        self._solve_level_b()

    # -- small helpers ------------------------------------------------------

    def _against_exp(self, fn, lo: float, hi: float) -> np.ndarray:
        """int_lo^hi fn(u) * exp(mu_k u) du for every demand component k."""
        if hi <= lo:
            return np.zeros(len(self._mus))
        out = integrate(
            lambda u: fn(u)[None, :] * np.exp(self._mus[:, None] * u), lo, hi
        )
        return np.asarray(out, dtype=float)

    def _E2(self, x: np.ndarray) -> np.ndarray:
        """int_{y2}^{x} W2(x-z) exp(-mu_k z) dz, shape (k,) + x.shape."""
        y2 = self.band.y2
        k = len(self._mus)
        lo = np.broadcast_to(y2, (k,) + x.shape)
        hi = np.broadcast_to(np.maximum(x, y2), (k,) + x.shape)
        mus = self._mus.reshape((k,) + (1,) * (x.ndim + 1))
        xx = x.reshape((1,) + x.shape + (1,))

        def f(z):
            return self.s2.W(xx - z) * np.exp(-mus * z)

        return integrate_rows(f, lo, hi)

    def _G(self, x: np.ndarray) -> np.ndarray:
        """int_{y2}^b u2(y2,b,x,z) exp(-mu_k z) dz per demand component."""
        up = self.om.up(x)
        shape = (len(self._mus),) + (1,) * x.ndim
        return self._B2.reshape(shape) * up[None, ...] - self._E2(x)

    # -- phase-2 primitives (domain [y2, b]) --------------------------------

    def up2(self, x):
        return self.om.up(np.asarray(x, dtype=float))

    def down2(self, x):
        x = np.asarray(x, dtype=float)
        return self.s2.Z(x - self.band.y2) - self.up2(x) * self.Z2band

    def H2xy(self, x):
        """Expected discounted holding until leaving (y2, b) at phase 2."""
        m, s2 = self.model, self.s2
        x = np.asarray(x, dtype=float)
        y2, b = self.band.y2, m.b
        up = self.up2(x)
        down = self.down2(x)
        h21 = (1.0 - down - up) / m.q
        h22 = (
            b * up
            + y2 * down
            + s2.Zbar(x - y2)
            - s2.phi_prime0 * s2.Wbar(x - y2)
            - up * (self.Zb2band - s2.phi_prime0 * self.Wb2band)
        )
        a2, c2 = m.h2.a, m.h2.c
        return (a2 + c2 * s2.phi_prime0 / m.q) * h21 + (c2 / m.q) * (x - h22)

    def _A(self, x):
        m = self.model
        a1, c1 = m.h1.a, m.h1.c
        omZ = self.om.apply_Z1(x)
        omW = self.om.apply_Wbarbar1(x)
        return (
            self.H2xy(x)
            + (a1 / m.q) * (self.down2(x) - omZ / self.Z1y1)
            + c1 * (omZ / self.Z1y1 * self.Wbb1y1 - omW)
        )

    def alpha2(self, x):
        return self.up2(x) + self.om.apply_Z1(x) * self.up_y1 / self.denom

    def beta2(self, x):
        return self._A(x) + self.om.apply_Z1(x) * self.A_y1 / self.denom

    def _mu_base(self, x):
        G = self._G(np.asarray(x, dtype=float))
        mus, ws = self._mus, self._ws
        coef = ws * (self.model.penalty.p0 + self.model.penalty.p1 / mus + self.S1xy0) + ws * mus * self._cS
        return self.model.lam * np.tensordot(coef, G, axes=(0, 0))

    def _gamma_base(self, x):
        G = self._G(np.asarray(x, dtype=float))
        coef = self._ws * (1.0 + self._mus * self._cZ)
        return self.model.lam / self.Z1y1 * np.tensordot(coef, G, axes=(0, 0))

    def mu2(self, x):
        g = self._gamma_base(x)
        return self._mu_base(x) + g * self._mu_y1 / (1.0 - self._gamma_y1)

    def gamma2(self, x):
        g = self._gamma_base(x)
        return self.up2(x) + self.up_y1 * g / (1.0 - self._gamma_y1)

    def omega2w(self, x):
        k = self.model.switching
        omZ = self.om.apply_Z1(x)
        return (
            k.k20 * self.up2(x)
            + k.k21 * self.down2(x)
            + omZ / self.Z1y1 * (k.k12 + self._k2num / (1.0 - self.r))
        )

    def delta2(self, x):
        return self.up2(x) + self.om.apply_Z1(x) / self.Z1y1 * self.delta2_y1

    # -- phase-1 primitives (domain [0, y1]; constant below 0) ---------------

    def H1xy(self, x):
        """Expected discounted holding at phase 1 (floor-reflected) until y1."""
        m, s1 = self.model, self.s1
        x = np.asarray(x, dtype=float)
        zr = s1.Z(x) / self.Z1y1
        return (m.h1.a / m.q) * (1.0 - zr) + m.h1.c * (zr * self.Wbb1y1 - s1.Wbarbar(x))

    def S1xy(self, x):
        """Expected discounted shortage at phase 1 until reaching y1.

        Potential-density integral plus the geometric renewal of returns to
        the floor; extends automatically as a constant for x < 0.
        """
        s1 = self.s1
        x = np.asarray(x, dtype=float)
        lam = self.model.lam
        xp = np.maximum(x, 0.0)
        Px = integrate_rows(
            lambda z: s1.W(xp[..., None] - z) * lam * self._ptail(z),
            np.zeros_like(xp),
            xp,
        )
        Ix = s1.W(x) * self.P1 / self.W1y1 - Px
        down1 = s1.Z(x) - s1.W(x) * self.Z1y1 / self.W1y1
        return Ix + down1 * self.P1 / self.Z1y1

    def alpha1(self, x):
        return self.s1.Z(np.asarray(x, dtype=float)) / self.Z1y1 * self.alpha2_y1

    def beta1(self, x):
        zr = self.s1.Z(np.asarray(x, dtype=float)) / self.Z1y1
        return self.H1xy(x) + zr * self.beta2_y1

    def mu1(self, x):
        zr = self.s1.Z(np.asarray(x, dtype=float)) / self.Z1y1
        return self.S1xy(x) + zr * self.mu2_y1

    def gamma1(self, x):
        return self.s1.Z(np.asarray(x, dtype=float)) / self.Z1y1 * self.gamma2_y1

    def omega1(self, x):
        zr = self.s1.Z(np.asarray(x, dtype=float)) / self.Z1y1
        return zr * (self.model.switching.k12 + self.omega2_y1)

    def delta1(self, x):
        return self.s1.Z(np.asarray(x, dtype=float)) / self.Z1y1 * self.delta2_y1

    # -- level-b fixed points ------------------------------------------------

    def _solve_level_b(self) -> None:
        m = self.model
        y3, b = self.band.y3, m.b
        lam, q = m.lam, m.q
        d = m.demand
        w = lam / (lam + q)
        sfb = d.sf(b)

        def stack2(z):
            x = b - z
            return np.stack(
                [
                    self.alpha2(x), self.beta2(x),
                    self.gamma2(x), self.mu2(x),
                    self.delta2(x), self.omega2w(x),
                ]
            ) * d.pdf(z)

        def stack1(z):
            x = b - z
            return np.stack(
                [
                    self.alpha1(x), self.beta1(x),
                    self.gamma1(x), self.mu1(x),
                    self.delta1(x), self.omega1(x),
                ]
            ) * d.pdf(z)

        J2 = integrate(stack2, 0.0, b - y3) if b - y3 > 0 else np.zeros(6)
        J1 = integrate(stack1, b - y3, b) if y3 > 0 else np.zeros(6)
        zero = np.asarray([0.0])
        tail = np.array(
            [
                float(self.alpha1(zero)[0]), float(self.beta1(zero)[0]),
                float(self.gamma1(zero)[0]), float(self.mu1(zero)[0]),
                float(self.delta1(zero)[0]), float(self.omega1(zero)[0]),
            ]
        ) * sfb

        mH = w * (J2[0] + J1[0] + tail[0])
        cH = m.h0_b / (q + lam) + w * (J2[1] + J1[1] + tail[1])
        mS = w * (J2[2] + J1[2] + tail[2])
        cS = w * (float(self._ptail(b)) + J2[3] + J1[3] + tail[3])
        mK = w * (J2[4] + J1[4] + tail[4])
        k = m.switching
        cK = w * (
            J2[5] + J1[5] + tail[5]
            + k.k02 * d.cdf(b - y3)
            + k.k01 * (1.0 - d.cdf(b - y3))
        )
        for name, mm in (("holding", mH), ("shortage", mS), ("switching", mK)):
            if abs(mm) >= 1.0:
                raise FixedPointNotContractive(f"{name} level-b multiplier |m|={mm} >= 1")
        self.H0 = float(cH / (1.0 - mH))
        self.S0 = float(cS / (1.0 - mS))
        self.K0 = float(cK / (1.0 - mK))

    # -- assembled cost functions -------------------------------------------

    def calH1(self, x):
        return self.alpha1(x) * self.H0 + self.beta1(x)

    def calH2(self, x):
        return self.alpha2(x) * self.H0 + self.beta2(x)

    def calS1(self, x):
        return self.mu1(x) + self.gamma1(x) * self.S0

    def calS2(self, x):
        return self.mu2(x) + self.gamma2(x) * self.S0

    def calK1(self, x):
        return self.omega1(x) + self.delta1(x) * self.K0

    def calK2(self, x):
        return self.omega2w(x) + self.delta2(x) * self.K0


@lru_cache(maxsize=128)
def _assembly(model: ModelConfig, band: BandOne) -> TypeOneAssembly:
    return TypeOneAssembly(model, band)


@dataclass(frozen=True)
class CostSurface:
    """Piecewise cost surface per the switching-zone table.

    Components H/S/K already include the +K21 / +K12 lump inside the
    switching zones; V = H + S + K.  side=-1/+1 select the one-sided limit
    branch at a threshold (side=0 returns the table value).
    """

    model: ModelConfig
    band: object
    kind: str
    H0: float
    S0: float
    K0: float
    branches: dict = field(repr=False)
    thresholds: tuple = ()

    @property
    def V0(self) -> float:
        return self.H0 + self.S0 + self.K0

    def scalar(self, name: str) -> float:
        return {"H": self.H0, "S": self.S0, "K": self.K0, "V": self.V0}[name]

    def _tags(self, phase: int, x: np.ndarray, side: int):
        y2, y1 = self.band.y2, self.band.y1
        y4 = getattr(self.band, "y4", None)
        if phase == 2:
            in_low = x <= y2 if side <= 0 else x < y2
            yield "p1k", in_low
            yield "p2", ~in_low
            return
        if side < 0:
            low = x <= y1
        else:
            low = x < y1
        if y4 is None:
            yield "p1", low
            yield "p2k", ~low
            return
        if side > 0:
            up = x >= y4
        else:
            up = x > y4
        yield "p1", low
        yield "p2k", ~low & ~up
        yield "up", up

    def component(self, name: str, phase: int, x, side: int = 0):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x_arr < self.model.l - 1e-12) or np.any(x_arr > self.model.b + 1e-12):
            raise OutOfBand("x outside [l, b]")
        out = np.empty_like(x_arr)
        for tag, mask in self._tags(phase, x_arr, side):
            if np.any(mask):
                out[mask] = self.branches[tag][name](x_arr[mask])
        return out[0] if np.isscalar(x) or np.asarray(x).ndim == 0 else out

    def V(self, phase: int, x, side: int = 0):
        return self.component("V", phase, x, side)


def _make_branches(asm: TypeOneAssembly) -> dict:
    k = asm.model.switching

    def with_v(h, s, kk):
        return {"H": h, "S": s, "K": kk, "V": lambda x: h(x) + s(x) + kk(x)}

    return {
        "p1": with_v(asm.calH1, asm.calS1, asm.calK1),
        "p1k": with_v(asm.calH1, asm.calS1, lambda x: asm.calK1(x) + k.k21),
        "p2": with_v(asm.calH2, asm.calS2, asm.calK2),
        "p2k": with_v(asm.calH2, asm.calS2, lambda x: asm.calK2(x) + k.k12),
    }


def total_cost(model: ModelConfig, band: BandOne) -> CostSurface:
    """Assemble the full type-one surface (Doshi when y3 = y2)."""
    asm = _assembly(model, band.check(model.b))
    return CostSurface(
        model=model,
        band=band,
        kind="doshi" if band.is_doshi else "one",
        H0=asm.H0,
        S0=asm.S0,
        K0=asm.K0,
        branches=_make_branches(asm),
        thresholds=(band.y2, band.y3, band.y1),
    )


# -- spec-level operation wrappers -------------------------------------------

def holding_exit_two_sided(model: ModelConfig, band: BandOne, x):
    """H2-part only: discounted holding until leaving (y2, b) from phase 2."""
    if np.any(np.asarray(x) < band.y2 - 1e-12) or np.any(np.asarray(x) > model.b + 1e-12):
        raise OutOfBand(f"x outside [{band.y2}, {model.b}]")
    return _assembly(model, band.check(model.b)).H2xy(x)


def holding_reflected(model: ModelConfig, band: BandOne, x):
    """Discounted holding at phase 1 (reflected at the floor) until y1."""
    if np.any(np.asarray(x) < -1e-12) or np.any(np.asarray(x) > band.y1 + 1e-12):
        raise OutOfBand(f"x outside [0, {band.y1}]")
    return _assembly(model, band.check(model.b)).H1xy(x)


def shortage_reflected(model: ModelConfig, band: BandOne, x):
    """Discounted shortage at phase 1 (reflected at the floor) until y1."""
    if np.any(np.asarray(x) < -1e-12) or np.any(np.asarray(x) > band.y1 + 1e-12):
        raise OutOfBand(f"x outside [0, {band.y1}]")
    return _assembly(model, band.check(model.b)).S1xy(x)


def holding_assemble(model: ModelConfig, band: BandOne):
    asm = _assembly(model, band.check(model.b))
    return asm.calH1, asm.calH2, asm.H0


def shortage_assemble(model: ModelConfig, band: BandOne):
    asm = _assembly(model, band.check(model.b))
    return asm.calS1, asm.calS2, asm.S0


def switching_assemble(model: ModelConfig, band: BandOne):
    asm = _assembly(model, band.check(model.b))
    return asm.calK1, asm.calK2, asm.K0
