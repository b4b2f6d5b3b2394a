"""Shared test helpers: independent oracles and tiny scenario builders.

The oracles deliberately avoid the library's own code paths: rates are
regrouped with explicit loops, argmaxes come from dense grids, and
reachability is checked by walking the next-hop function.
"""

from __future__ import annotations

import math

import numpy as np

from fedrelay.scenario import AccuracyModel, DeviceParams, Scenario


def make_device(
    c_p=0.005,
    c_t=50.0,
    r_p=80.0,
    T_a=0.01,
    w=1.0,
    a=10.0,
    b=10.0,
    c=12.0,
    s_max=None,
    q_max=None,
    p_max=10.0,
) -> DeviceParams:
    if q_max is None:
        q_max = c * b
    if s_max is None:
        s_max = math.log(1e6) / c
    return DeviceParams(
        c_p=c_p, c_t=c_t, r_p=r_p, T_a=T_a, w=w,
        accuracy=AccuracyModel(a=a, b=b, c=c),
        s_max=s_max, q_max=q_max, p_max=p_max,
    )


def make_scenario(positions, devices=None, h=10.0, alpha=2.0, sigma2=1.0,
                  I_d=0.1, c_a=0.0096, **device_kwargs) -> Scenario:
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0] - 1
    if devices is None:
        devices = tuple(make_device(**device_kwargs) for _ in range(n))
    return Scenario(
        devices=devices, positions=positions, h=np.asarray(h),
        alpha=alpha, sigma2=sigma2, I_d=I_d, c_a=c_a,
    )


def exp_series(x: float, terms: int = 80) -> float:
    """Taylor-series exponential, summed term by term."""
    total, term = 0.0, 1.0
    for k in range(1, terms + 1):
        total += term
        term *= x / k
    return total


def walk_reaches_ap(targets, n: int) -> bool:
    """Follow each device's next-hop chain; true iff every chain hits the
    access point within n hops (cycles and self-loops therefore fail)."""
    ap = n
    for i in range(n):
        node = i
        for _ in range(n):
            node = int(targets[node])
            if node == ap:
                break
        if node != ap:
            return False
    return True


def grouped_rates_oracle(targets, powers, H, scen) -> np.ndarray:
    """Rates by explicit relay grouping: for each device, sum the received
    powers of the other devices aiming at the same relay."""
    n = scen.n_devices
    rates = np.zeros(n)
    for i in range(n):
        m = int(targets[i])
        own = H[i, m] * powers[i]
        interference = 0.0
        for k in range(n):
            if k != i and int(targets[k]) == m:
                interference += H[k, m] * powers[k]
        sinr = own / (interference + scen.sigma2)
        rates[i] = scen.devices[i].w * math.log2(1.0 + sinr)
    return rates


def profit_oracle(i, prices, targets, powers, demand, rates, scen) -> float:
    """Term-by-term device profit recomputation."""
    d = scen.devices[i]
    n, ap = scen.n_devices, scen.ap
    revenue = prices[i] * demand[i]
    energy = d.c_t * (scen.I_d / rates[i]) * powers[i]
    processing = d.c_p * demand[i]
    relay_revenue = scen.c_a * sum(1 for k in range(n) if k != i and int(targets[k]) == i)
    relay_fee = 0.0 if int(targets[i]) == ap else scen.c_a
    return revenue - energy - processing + relay_revenue - relay_fee


def _concave_grid_argmax(f, lo: float, hi: float, fine_step: float) -> float:
    """Argmax of a strictly concave f over the grid {lo + k*fine_step}.

    Evaluated as a coarse pass plus a fine pass around the coarse winner;
    for concave f this equals the dense-grid argmax at a fraction of the
    evaluations.
    """
    n_fine = int(math.floor((hi - lo) / fine_step))
    stride = max(1, n_fine // 2000)
    ks = np.arange(0, n_fine + 1, stride)
    k0 = int(ks[np.argmax(f(lo + ks * fine_step))])
    k_lo = max(0, k0 - stride)
    k_hi = min(n_fine, k0 + stride)
    ks2 = np.arange(k_lo, k_hi + 1)
    return lo + int(ks2[np.argmax(f(lo + ks2 * fine_step))]) * fine_step


def grid_argmax_demand(i: int, q_i: float, scen, step: float = 1e-6) -> float:
    """Dense-grid argmax of the owner's per-device surplus f_i(s) - q*s."""
    d = scen.devices[i].accuracy
    s_max = scen.devices[i].s_max

    def surplus(s):
        return d.a - d.b * np.exp(-d.c * s) - q_i * s

    return _concave_grid_argmax(surplus, 0.0, s_max, step)


def grid_argmax_price(i: int, scen, step: float = 1e-6, q_lo: float | None = None) -> float:
    """Dense-grid argmax of the price-dependent profit (q - c_p)*ln(cb/q)/c."""
    dev = scen.devices[i]
    cb = dev.accuracy.c * dev.accuracy.b
    if q_lo is None:
        q_lo = step

    def margin(q):
        return (q - dev.c_p) * np.log(cb / q) / dev.accuracy.c

    return _concave_grid_argmax(margin, q_lo, cb, step)
