"""Discrete-event Monte Carlo simulator of the controlled inventory.

Strictly more general than the analytic engine: arbitrary finite unions of
switching/selection intervals, any backlog floor l <= 0, and optional
non-affine holding rates.  There is no time discretization anywhere: drift
segments are integrated in closed form and threshold crossings are solved
exactly, so results are reproducible bit for bit.

Randomness is counter-based (a splitmix64-style hash of (seed, path, draw)),
which makes every path's draws independent of batch size and worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidStart, ValidationError
from .model import ModelConfig, upper_cost_bound

TRUNCATION_FRACTION = 1e-4  # discounted tail mass kept below this share of the cost bound

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_PATH_STRIDE = _U64(0xBF58476D1CE4E5B7)  # odd constant decorrelating path keys


def _mix(x):
    """splitmix64 finalizer; vectorized over uint64 arrays."""
    x = (x ^ (x >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> _U64(27))) * _U64(0x94D049BB133111EB)
    return x ^ (x >> _U64(31))


def _path_keys(base_seed: int, start: int, n: int) -> np.ndarray:
    p = np.arange(start, start + n, dtype=np.uint64)
    return _mix(_U64(base_seed & 0xFFFFFFFFFFFFFFFF) + _PATH_STRIDE * (p + _U64(1)))


def _uniforms(keys: np.ndarray, counter: int) -> np.ndarray:
    """Uniform(0,1) draw with index `counter` for every path key."""
    offset = _U64((0x9E3779B97F4A7C15 * (counter + 1)) & 0xFFFFFFFFFFFFFFFF)
    bits = _mix(keys + offset)
    return ((bits >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class SimStrategy:
    """Band strategy as closed intervals inside [l, b).

    a12 / a21 are the switching zones, c1 the restart-selection zone for
    phase 1 (its complement selects phase 2).
    """

    a12: tuple[tuple[float, float], ...]
    a21: tuple[tuple[float, float], ...]
    c1: tuple[tuple[float, float], ...]

    @classmethod
    def from_band(cls, band, model: ModelConfig) -> "SimStrategy":
        y4 = getattr(band, "y4", None)
        hi = band.y4 if y4 is not None else model.b
        return cls(
            a12=((band.y1, hi),),
            a21=((model.l, band.y2),),
            c1=((model.l, band.y3),),
        )

    def check(self, model: ModelConfig) -> "SimStrategy":
        for name, ivs in (("a12", self.a12), ("a21", self.a21), ("c1", self.c1)):
            for lo, hi in ivs:
                if lo > hi or lo < model.l - 1e-12 or hi > model.b + 1e-12:
                    raise ValidationError(f"{name} interval [{lo}, {hi}] outside [l, b]")
        for lo, hi in self.a12:
            for lo2, hi2 in self.a21:
                if max(lo, lo2) <= min(hi, hi2):
                    raise ValidationError("a12 and a21 must be disjoint")
            for lo2, hi2 in self.c1:
                if max(lo, lo2) <= min(hi, hi2):
                    raise ValidationError("a12 must avoid the phase-1 selection zone")
        for lo, hi in self.a21:
            if not any(lo2 - 1e-12 <= lo and hi <= hi2 + 1e-12 for lo2, hi2 in self.c1):
                raise ValidationError("a21 must lie inside the phase-1 selection zone")
        return self

    @staticmethod
    def _contains(ivs, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in ivs:
            out |= (x >= lo) & (x <= hi)
        return out

    @staticmethod
    def _next_entry(ivs, x: np.ndarray) -> np.ndarray:
        """Smallest point of the union at or above x; +inf when none."""
        out = np.full(x.shape, np.inf)
        for lo, hi in ivs:
            cand = np.where(x <= hi, np.maximum(x, lo), np.inf)
            out = np.minimum(out, cand)
        return out

    def in_zone(self, which: str, x: np.ndarray) -> np.ndarray:
        return self._contains(getattr(self, which), x)

    def next_entry(self, which: str, x: np.ndarray) -> np.ndarray:
        return self._next_entry(getattr(self, which), x)


@dataclass(frozen=True)
class ComponentEstimate:
    mean: float
    std_error: float


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    n_paths: int
    holding: ComponentEstimate
    shortage: ComponentEstimate
    switching: ComponentEstimate
    truncation_horizon: float
    truncation_bound: float


def truncation_horizon(model: ModelConfig) -> float:
    """Horizon after which the remaining discounted cost is negligible."""
    return float(np.log(1.0 / TRUNCATION_FRACTION) / model.q)


def _segment_cost(a, c, x, sigma, dur, q, t0):
    """int_0^dur exp(-q(t0+s)) (a + c(x + sigma s)) ds in closed form."""
    em = -np.expm1(-q * dur)  # 1 - exp(-q dur)
    ramp = (em - q * dur * np.exp(-q * dur)) / q**2
    return np.exp(-q * t0) * ((a + c * x) * em / q + c * sigma * ramp)


def _sample_demand(model: ModelConfig, u_sel: np.ndarray, u_size: np.ndarray) -> np.ndarray:
    d = model.demand
    if len(d.rates) == 1:
        return -np.log(u_size) / d.rates[0]
    cum = np.cumsum(d.weights)
    idx = np.searchsorted(cum, u_sel, side="left")
    idx = np.minimum(idx, len(d.rates) - 1)
    rates = np.asarray(d.rates)[idx]
    return -np.log(u_size) / rates


def _run_paths(
    model: ModelConfig,
    strategy: SimStrategy,
    x0: float,
    phase0: int,
    keys: np.ndarray,
    holding_fn=None,
):
    """Evolve one batch of paths to the truncation horizon.

    Returns per-path (holding, shortage, switching) discounted totals.
    Inner passes operate on shrinking index subsets; a path's draws depend
    only on its key and the round counter, so batch composition is
    irrelevant to the outcome.
    """
    n = len(keys)
    m = model
    q, lam, b, l = m.q, m.lam, m.b, m.l
    t_star = truncation_horizon(m)
    k = m.switching
    single = len(m.demand.rates) == 1

    x = np.full(n, float(x0))
    ph = np.full(n, int(phase0), dtype=np.int64)
    t = np.zeros(n)
    hold = np.zeros(n)
    short = np.zeros(n)
    switch = np.zeros(n)

    if phase0 == 0 and abs(x0 - b) > 1e-12:
        raise InvalidStart("phase 0 starts only at capacity b")
    if x0 < l - 1e-12 or x0 > b + 1e-12:
        raise InvalidStart(f"x0={x0} outside [{l}, {b}]")

    # per-phase coefficient tables indexed by phase id (0, 1, 2)
    sig_of = np.array([0.0, m.sigma1, m.sigma2])
    a_of = np.array([m.h0_b, m.h1.a, m.h2.a])
    c_of = np.array([0.0, m.h1.c, m.h2.c])

    def accrue(idx, duration):
        if idx.size == 0:
            return
        xm, tm, phm = x[idx], t[idx], ph[idx]
        sig = sig_of[phm]
        if holding_fn is None:
            hold[idx] += _segment_cost(a_of[phm], c_of[phm], xm, sig, duration, q, tm)
        else:
            # general bounded holding rate: 32-node Gauss rule per segment
            gl_t, gl_w = np.polynomial.legendre.leggauss(32)
            gl_t = (gl_t + 1.0) / 2.0
            s = duration[:, None] * gl_t
            rates = holding_fn(xm[:, None] + sig[:, None] * s, phm[:, None])
            vals = np.exp(-q * (tm[:, None] + s)) * rates
            hold[idx] += duration * (vals @ (gl_w / 2.0))

    active = np.arange(n)
    counter = 0
    while active.size:
        u_tau = _uniforms(keys[active], 3 * counter)
        t_arr = t[active] - np.log(u_tau) / lam
        seg_end = np.minimum(t_arr, t_star)

        # deterministic drift, switch-zone entries and capacity stops
        sub = np.arange(active.size)
        guard = 0
        while sub.size:
            guard += 1
            if guard > 64:
                raise RuntimeError("drift resolution did not settle; malformed strategy?")
            idx = active[sub]
            phs = ph[idx]
            se = seg_end[sub]
            idle = phs == 0
            if np.any(idle):
                j = idx[idle]
                accrue(j, se[idle] - t[j])
                t[j] = se[idle]
                sub = sub[~idle]
                idx = active[sub]
                phs = ph[idx]
                se = seg_end[sub]
            if sub.size == 0:
                break
            xs, ts = x[idx], t[idx]
            is1 = phs == 1
            sig = sig_of[phs]
            entry = np.where(
                is1, strategy.next_entry("a12", xs), strategy.next_entry("a21", xs)
            )
            t_set = (entry - xs) / sig  # inf entry propagates to inf time
            t_cap = (b - xs) / sig
            t_evt = np.minimum(t_set, t_cap)
            fires = ts + t_evt < se
            accrue(idx, np.where(fires, t_evt, se - ts))
            settles = ~fires
            if np.any(settles):
                j = idx[settles]
                x[j] = xs[settles] + sig[settles] * (se[settles] - ts[settles])
                t[j] = se[settles]
            if np.any(fires):
                j = idx[fires]
                tj = ts[fires] + t_evt[fires]
                t[j] = tj
                disc = np.exp(-q * tj)
                hit_cap = t_cap[fires] <= t_set[fires]
                jc, jd = j[hit_cap], j[~hit_cap]
                x[jc] = b
                switch[jc] += np.where(ph[jc] == 1, k.k10, k.k20) * disc[hit_cap]
                ph[jc] = 0
                x[jd] = entry[fires][~hit_cap]
                switch[jd] += np.where(ph[jd] == 1, k.k12, k.k21) * disc[~hit_cap]
                ph[jd] = np.where(ph[jd] == 1, 2, 1)
            sub = sub[fires]

        live = t_arr < t_star
        jump = active[live]
        t[active[~live]] = t_star
        if jump.size:
            u_sel = None if single else _uniforms(keys[jump], 3 * counter + 1)
            u_size = _uniforms(keys[jump], 3 * counter + 2)
            y = _sample_demand(m, u_sel, u_size)
            disc = np.exp(-q * t[jump])
            from_cap = ph[jump] == 0
            raw = np.where(from_cap, b - y, x[jump] - y)
            lost = np.maximum(l - raw, 0.0)
            short[jump] += np.where(lost > 0, m.penalty(lost), 0.0) * disc
            landed = np.maximum(raw, l)
            x[jump] = landed
            if np.any(from_cap):
                j = jump[from_cap]
                to1 = strategy.in_zone("c1", landed[from_cap])
                switch[j] += np.where(to1, k.k01, k.k02) * disc[from_cap]
                ph[j] = np.where(to1, 1, 2)
            # landing inside the other phase's switching zone triggers an
            # immediate switch (disjointness bounds this to one pass)
            for _ in range(2):
                sw12 = (ph[jump] == 1) & strategy.in_zone("a12", x[jump])
                sw21 = (ph[jump] == 2) & strategy.in_zone("a21", x[jump])
                if not (np.any(sw12) or np.any(sw21)):
                    break
                j = jump[sw12]
                switch[j] += k.k12 * np.exp(-q * t[j])
                ph[j] = 2
                j = jump[sw21]
                switch[j] += k.k21 * np.exp(-q * t[j])
                ph[j] = 1
        active = jump
        counter += 1

    return hold, short, switch


def simulate_path(model: ModelConfig, strategy: SimStrategy, x0: float, phase0: int,
                  rng_seed: int, holding_fn=None):
    """One path; returns (total, holding, shortage, switching).

    Identical to path 0 of estimate_cost(base_seed=rng_seed).
    """
    strategy.check(model)
    keys = _path_keys(rng_seed, 0, 1)
    h, s, w = _run_paths(model, strategy, x0, phase0, keys, holding_fn=holding_fn)
    return float(h[0] + s[0] + w[0]), float(h[0]), float(s[0]), float(w[0])


def _worker_paths(model, strategy, x0, phase0, base_seed, span):
    lo, hi = span
    keys = _path_keys(base_seed, lo, hi - lo)
    return span, _run_paths(model, strategy, x0, phase0, keys)


def estimate_cost(
    model: ModelConfig,
    strategy: SimStrategy,
    x0: float,
    phase0: int,
    n_paths: int,
    base_seed: int,
    jobs: int = 1,
    holding_fn=None,
) -> SimEstimate:
    """Mean and standard error over independent per-path seed streams.

    Paths are chunked for parallelism but each path's draws depend only on
    (base_seed, path index, draw index), and the final reduction runs once
    over the full per-path arrays, so any worker count gives identical
    output.
    """
    if n_paths < 2:
        raise ValidationError("n_paths must be >= 2 for a standard error")
    strategy.check(model)
    hold = np.empty(n_paths)
    short = np.empty(n_paths)
    switch = np.empty(n_paths)
    chunk = 100_000 if jobs <= 1 else max(10_000, n_paths // (4 * jobs))
    spans = [(lo, min(lo + chunk, n_paths)) for lo in range(0, n_paths, chunk)]

    if jobs > 1 and len(spans) > 1 and holding_fn is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_worker_paths, model, strategy, x0, phase0, base_seed, s)
                for s in spans
            ]
            for fut in futures:
                (lo, hi), (h, s, w) = fut.result()
                hold[lo:hi], short[lo:hi], switch[lo:hi] = h, s, w
    else:
        for lo, hi in spans:
            keys = _path_keys(base_seed, lo, hi - lo)
            h, s, w = _run_paths(model, strategy, x0, phase0, keys, holding_fn=holding_fn)
            hold[lo:hi], short[lo:hi], switch[lo:hi] = h, s, w

    total = hold + short + switch

    def comp(arr):
        return ComponentEstimate(
            mean=float(np.mean(arr)),
            std_error=float(np.std(arr, ddof=1) / np.sqrt(n_paths)),
        )

    c_total = comp(total)
    return SimEstimate(
        mean=c_total.mean,
        std_error=c_total.std_error,
        n_paths=n_paths,
        holding=comp(hold),
        shortage=comp(short),
        switching=comp(switch),
        truncation_horizon=truncation_horizon(model),
        truncation_bound=TRUNCATION_FRACTION * upper_cost_bound(model),
    )


@dataclass(frozen=True)
class OccupationEstimate:
    edges: np.ndarray
    mean: np.ndarray       # per-bin discounted occupation
    std_error: np.ndarray
    total: float           # per-path total occupation, averaged
    total_std_error: float


def estimate_occupation(
    model: ModelConfig,
    phase: int,
    a: float,
    d: float,
    x0: float,
    n_paths: int,
    bins: int,
    base_seed: int,
) -> OccupationEstimate:
    """Discounted occupation histogram of the free process killed at exiting [a, d].

    Oracle for the resolvent density: bin means estimate the integral of
    u(a, d, x0, y) over the bin; the total obeys the exit-discount identity
    q * total = 1 - up - down.
    """
    if not a <= x0 <= d:
        raise InvalidStart(f"x0={x0} outside [{a}, {d}]")
    m = model
    q, lam = m.q, m.lam
    sig = m.sigma(phase)
    t_star = truncation_horizon(m)
    edges = np.linspace(a, d, bins + 1)
    occ = np.zeros((n_paths, bins))
    keys = _path_keys(base_seed, 0, n_paths)

    x = np.full(n_paths, float(x0))
    t = np.zeros(n_paths)
    alive = np.ones(n_paths, dtype=bool)
    counter = 0
    while np.any(alive):
        u_tau = _uniforms(keys, 3 * counter)
        u_sel = _uniforms(keys, 3 * counter + 1)
        u_size = _uniforms(keys, 3 * counter + 2)
        counter += 1
        tau = -np.log(u_tau) / lam
        # segment runs until the demand, the upper barrier, or the horizon
        t_cap = (d - x) / sig
        dur = np.minimum(np.minimum(tau, t_cap), t_star - t)
        idx = np.where(alive)[0]
        xs, ts, dus = x[idx], t[idx], dur[idx]
        # discounted time spent below each interior edge during the segment
        cross = np.clip((edges[None, 1:-1] - xs[:, None]) / sig, 0.0, dus[:, None])
        stamps = np.concatenate(
            [np.zeros((len(idx), 1)), cross, dus[:, None]], axis=1
        )
        disc = np.exp(-q * (ts[:, None] + stamps))
        occ[idx] += (disc[:, :-1] - disc[:, 1:]) / q
        killed_up = alive & (t_cap <= tau) & (t + t_cap <= t_star - 1e-15)
        timed_out = alive & (t_star - t <= np.minimum(tau, t_cap))
        alive = alive & ~killed_up & ~timed_out
        if not np.any(alive):
            break
        t = np.where(alive, t + tau, t)
        y = _sample_demand(m, u_sel, u_size)
        x = np.where(alive, x + sig * tau - y, x)
        killed_down = alive & (x < a)
        alive = alive & ~killed_down

    mean = occ.mean(axis=0)
    se = occ.std(axis=0, ddof=1) / np.sqrt(n_paths)
    totals = occ.sum(axis=1)
    return OccupationEstimate(
        edges=edges,
        mean=mean,
        std_error=se,
        total=float(totals.mean()),
        total_std_error=float(totals.std(ddof=1) / np.sqrt(n_paths)),
    )
