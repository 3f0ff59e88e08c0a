"""Metropolis Monte Carlo of the Euclidean Z_N gauge theory on (diamond lattice) x (time).

Spatial links live on the bonds of the BR dual diamond lattice of an L^3
torus (oriented cyan -> lime), one copy per time slice.  Temporal links sit on
every diamond vertex between consecutive slices.  Weights:

    E/T = -beta_s sum_{t, hexagon} Re w^{P_hex} - beta_tau sum_{t, bond} Re w^{P_temp}

with w = exp(2 pi i / N), P_hex the oriented sum of the six hexagon links
and P_temp(t, b=(i->j)) = s_t(b) + u_t(j) - s_{t+1}(b) - u_t(i).

Each sweep visits all spatial links (slice-major) then all temporal links and
consumes two pre-drawn uniforms per link: the first selects the proposal
(uniform over the N-1 other values), the second is the acceptance test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .dual import dual_diamond_map
from .lattice import LatticeSpec, build_code_lattice


class GaugeError(ValueError):
    pass


# --------------------------------------------------------------------------
# lattice tables


@dataclass
class GaugeLattice:
    L: int
    Lt: int
    N: int
    n_vertices: int
    bond_ends: np.ndarray  # (B, 2): cyan, lime
    hex_bonds: np.ndarray  # (H, 6)
    hex_signs: np.ndarray  # (H, 6) +1 when the bond is traversed cyan -> lime
    bond_hexes: np.ndarray  # (B, maxdeg) hexagon index or -1
    bond_hex_signs: np.ndarray  # (B, maxdeg)
    vertex_bonds: np.ndarray  # (V, 4)
    vertex_roles: np.ndarray  # (V, 4): +1 if the vertex is the lime end of that bond, -1 if cyan
    vertex_coords: np.ndarray  # (V, 3) doubled coordinates
    vertex_kind: list

    @property
    def n_bonds(self) -> int:
        return int(self.bond_ends.shape[0])

    @property
    def n_hexagons(self) -> int:
        return int(self.hex_bonds.shape[0])

    @property
    def n_links(self) -> int:
        return self.Lt * (self.n_bonds + self.n_vertices)


def build_euclidean_lattice(L: int, Lt: int, N: int = 2) -> GaugeLattice:
    if L % 2 or L < 2:
        raise GaugeError("spatial size L must be even and >= 2")
    if Lt < 2:
        raise GaugeError("temporal size must be >= 2")
    if N < 2:
        raise GaugeError("N must be >= 2")
    lat = build_code_lattice(LatticeSpec((L, L, L), "Periodic3Torus", 2))
    dual = dual_diamond_map(lat, "BR")
    B = len(dual.bonds)
    V = len(dual.vertex_coords)
    bond_ends = np.array(dual.bonds, dtype=np.int64)
    hex_bonds = np.array([h.cycle for h in dual.hexagons], dtype=np.int64)
    hex_signs = np.array([h.signs for h in dual.hexagons], dtype=np.int64)
    incid: list[list[tuple[int, int]]] = [[] for _ in range(B)]
    for h, (bs, ss) in enumerate(zip(hex_bonds, hex_signs)):
        for b, s in zip(bs, ss):
            incid[b].append((h, s))
    deg = max(len(x) for x in incid)
    bond_hexes = -np.ones((B, deg), dtype=np.int64)
    bond_hex_signs = np.zeros((B, deg), dtype=np.int64)
    for b, lst in enumerate(incid):
        for k, (h, s) in enumerate(lst):
            bond_hexes[b, k] = h
            bond_hex_signs[b, k] = s
    vb = np.zeros((V, 4), dtype=np.int64)
    vr = np.zeros((V, 4), dtype=np.int64)
    for v, bs in dual.gauss_stars.items():
        if len(bs) != 4:
            raise GaugeError("diamond vertex without degree 4")
        for k, b in enumerate(bs):
            vb[v, k] = b
            vr[v, k] = 1 if dual.bonds[b][1] == v else -1
    return GaugeLattice(L, Lt, N, V, bond_ends, hex_bonds, hex_signs, bond_hexes, bond_hex_signs,
                        vb, vr, np.array(dual.vertex_coords, dtype=np.int64), list(dual.vertex_kind))


# --------------------------------------------------------------------------
# configurations


@dataclass
class GaugeConfig:
    lattice: GaugeLattice
    s: np.ndarray  # (Lt, B) spatial links in Z_N
    u: np.ndarray  # (Lt, V) temporal links
    ps: np.ndarray = field(init=False)  # (Lt, H) spatial plaquette values
    pt: np.ndarray = field(init=False)  # (Lt, B) temporal plaquette values
    hist_s: np.ndarray = field(init=False)  # counts of spatial plaquettes per value
    hist_t: np.ndarray = field(init=False)

    def __post_init__(self):
        self.refresh()

    def refresh(self):
        g = self.lattice
        self.ps, self.pt = plaquette_values(g, self.s, self.u)
        self.hist_s = np.bincount(self.ps.ravel(), minlength=g.N).astype(np.int64)
        self.hist_t = np.bincount(self.pt.ravel(), minlength=g.N).astype(np.int64)

    def copy(self) -> "GaugeConfig":
        return GaugeConfig(self.lattice, self.s.copy(), self.u.copy())


def cold_start(g: GaugeLattice) -> GaugeConfig:
    return GaugeConfig(g, np.zeros((g.Lt, g.n_bonds), np.int64), np.zeros((g.Lt, g.n_vertices), np.int64))


def hot_start(g: GaugeLattice, rng: np.random.Generator) -> GaugeConfig:
    return GaugeConfig(g, rng.integers(0, g.N, (g.Lt, g.n_bonds)).astype(np.int64),
                       rng.integers(0, g.N, (g.Lt, g.n_vertices)).astype(np.int64))


def plaquette_values(g: GaugeLattice, s: np.ndarray, u: np.ndarray):
    """Spatial (Lt, H) and temporal (Lt, B) plaquette values from scratch."""
    ps = (s[:, g.hex_bonds] * g.hex_signs[None]).sum(-1) % g.N
    i, j = g.bond_ends[:, 0], g.bond_ends[:, 1]
    s_next = np.roll(s, -1, axis=0)
    pt = (s + u[:, j] - s_next - u[:, i]) % g.N
    return ps.astype(np.int64), pt.astype(np.int64)


def _cos_table(N: int) -> np.ndarray:
    return np.cos(2 * np.pi * np.arange(N) / N)


def energy(config: GaugeConfig, beta_s: float, beta_t: float) -> float:
    """E/T from the cached plaquette histograms."""
    c = _cos_table(config.lattice.N)
    return float(-beta_s * (config.hist_s @ c) - beta_t * (config.hist_t @ c))


def energy_full(config: GaugeConfig, beta_s: float, beta_t: float) -> float:
    """E/T recomputed from the link variables."""
    ps, pt = plaquette_values(config.lattice, config.s, config.u)
    c = _cos_table(config.lattice.N)
    return float(-beta_s * c[ps].sum() - beta_t * c[pt].sum())


def gauge_transform(config: GaugeConfig, g_field: np.ndarray) -> GaugeConfig:
    """Apply a_{xy} -> a_{xy} + g(x) - g(y) with ``g_field`` of shape (Lt, V)."""
    g = config.lattice
    i, j = g.bond_ends[:, 0], g.bond_ends[:, 1]
    s = (config.s + g_field[:, i] - g_field[:, j]) % g.N
    u = (config.u + g_field - np.roll(g_field, -1, axis=0)) % g.N
    return GaugeConfig(g, s, u)


def temporal_gauge(config: GaugeConfig) -> GaugeConfig:
    """Gauge-equivalent configuration with u = 0 on all slices but the last.

    The last slice keeps the Polyakov-loop value, which no gauge choice removes.
    """
    g = config.lattice
    gf = np.zeros((g.Lt, g.n_vertices), dtype=np.int64)
    for t in range(g.Lt - 1):
        gf[t + 1] = (gf[t] + config.u[t]) % g.N
    return gauge_transform(config, gf)


# --------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _sweep_zn(s, u, ps, pt, hist_s, hist_t, bond_ends, bond_hexes, bond_hex_signs,
              vertex_bonds, vertex_roles, cos_t, N, beta_s, beta_t, rand):
    Lt, B = s.shape
    V = u.shape[1]
    acc = 0
    k = 0
    for t in range(Lt):
        tm = (t - 1) % Lt
        for b in range(B):
            cur = s[t, b]
            new = cur + 1 if N == 2 else cur + 1 + int(rand[k, 0] * (N - 1))
            new %= N
            d = (new - cur) % N
            de = 0.0
            for m in range(bond_hexes.shape[1]):
                h = bond_hexes[b, m]
                if h < 0:
                    break
                old = ps[t, h]
                nv = (old + bond_hex_signs[b, m] * d) % N
                de -= beta_s * (cos_t[nv] - cos_t[old])
            o1 = pt[t, b]
            n1 = (o1 + d) % N
            o2 = pt[tm, b]
            n2 = (o2 - d) % N
            de -= beta_t * (cos_t[n1] - cos_t[o1] + cos_t[n2] - cos_t[o2])
            if de <= 0.0 or rand[k, 1] < np.exp(-de):
                s[t, b] = new
                for m in range(bond_hexes.shape[1]):
                    h = bond_hexes[b, m]
                    if h < 0:
                        break
                    old = ps[t, h]
                    nv = (old + bond_hex_signs[b, m] * d) % N
                    ps[t, h] = nv
                    hist_s[old] -= 1
                    hist_s[nv] += 1
                pt[t, b] = n1
                hist_t[o1] -= 1
                hist_t[n1] += 1
                pt[tm, b] = n2
                hist_t[o2] -= 1
                hist_t[n2] += 1
                acc += 1
            k += 1
    for t in range(Lt):
        for v in range(V):
            cur = u[t, v]
            new = cur + 1 if N == 2 else cur + 1 + int(rand[k, 0] * (N - 1))
            new %= N
            d = (new - cur) % N
            de = 0.0
            for m in range(4):
                b = vertex_bonds[v, m]
                old = pt[t, b]
                nv = (old + vertex_roles[v, m] * d) % N
                de -= beta_t * (cos_t[nv] - cos_t[old])
            if de <= 0.0 or rand[k, 1] < np.exp(-de):
                u[t, v] = new
                for m in range(4):
                    b = vertex_bonds[v, m]
                    old = pt[t, b]
                    nv = (old + vertex_roles[v, m] * d) % N
                    pt[t, b] = nv
                    hist_t[old] -= 1
                    hist_t[nv] += 1
                acc += 1
            k += 1
    return acc


@numba.njit(cache=True)
def _sweep_z2(s, u, ps, pt, hist_s, hist_t, bond_ends, bond_hexes, vertex_bonds, beta_s, beta_t, rand):
    """Z_2 specialisation: flips with energy change 2*beta*(sum of +-1 plaquettes)."""
    Lt, B = s.shape
    V = u.shape[1]
    acc = 0
    k = 0
    for t in range(Lt):
        tm = (t - 1) % Lt
        for b in range(B):
            ssum = 0
            for m in range(bond_hexes.shape[1]):
                h = bond_hexes[b, m]
                if h < 0:
                    break
                ssum += 1 - 2 * ps[t, h]
            tsum = (1 - 2 * pt[t, b]) + (1 - 2 * pt[tm, b])
            de = 2.0 * (beta_s * ssum + beta_t * tsum)
            if de <= 0.0 or rand[k, 1] < np.exp(-de):
                s[t, b] ^= 1
                for m in range(bond_hexes.shape[1]):
                    h = bond_hexes[b, m]
                    if h < 0:
                        break
                    hist_s[ps[t, h]] -= 1
                    ps[t, h] ^= 1
                    hist_s[ps[t, h]] += 1
                hist_t[pt[t, b]] -= 1
                pt[t, b] ^= 1
                hist_t[pt[t, b]] += 1
                hist_t[pt[tm, b]] -= 1
                pt[tm, b] ^= 1
                hist_t[pt[tm, b]] += 1
                acc += 1
            k += 1
    for t in range(Lt):
        for v in range(V):
            tsum = 0
            for m in range(4):
                tsum += 1 - 2 * pt[t, vertex_bonds[v, m]]
            de = 2.0 * beta_t * tsum
            if de <= 0.0 or rand[k, 1] < np.exp(-de):
                u[t, v] ^= 1
                for m in range(4):
                    b = vertex_bonds[v, m]
                    hist_t[pt[t, b]] -= 1
                    pt[t, b] ^= 1
                    hist_t[pt[t, b]] += 1
                acc += 1
            k += 1
    return acc


def metropolis_sweep(config: GaugeConfig, beta_s: float, beta_t: float, rng: np.random.Generator,
                     engine: str = "auto") -> float:
    """One sequential sweep; returns the acceptance rate."""
    g = config.lattice
    rand = rng.random((g.n_links, 2))
    if engine == "auto":
        engine = "z2" if g.N == 2 else "zn"
    if engine == "z2":
        if g.N != 2:
            raise GaugeError("the Z2 engine needs N = 2")
        acc = _sweep_z2(config.s, config.u, config.ps, config.pt, config.hist_s, config.hist_t,
                        g.bond_ends, g.bond_hexes, g.vertex_bonds, float(beta_s), float(beta_t), rand)
    elif engine == "zn":
        acc = _sweep_zn(config.s, config.u, config.ps, config.pt, config.hist_s, config.hist_t,
                        g.bond_ends, g.bond_hexes, g.bond_hex_signs, g.vertex_bonds, g.vertex_roles,
                        _cos_table(g.N), g.N, float(beta_s), float(beta_t), rand)
    else:
        raise GaugeError(f"unknown engine {engine!r}")
    return acc / g.n_links


def local_energy_change(config: GaugeConfig, link: tuple, new: int, beta_s: float, beta_t: float) -> float:
    """Full-recompute energy difference of setting one link (``("s"|"u", t, index)``)."""
    kind, t, idx = link
    trial = config.copy()
    arr = trial.s if kind == "s" else trial.u
    arr[t, idx] = new % config.lattice.N
    return energy_full(trial, beta_s, beta_t) - energy_full(config, beta_s, beta_t)


# --------------------------------------------------------------------------
# observables


def mean_spatial_plaquette(config: GaugeConfig) -> float:
    c = _cos_table(config.lattice.N)
    return float(config.hist_s @ c / config.hist_s.sum())


def mean_temporal_plaquette(config: GaugeConfig) -> float:
    c = _cos_table(config.lattice.N)
    return float(config.hist_t @ c / config.hist_t.sum())


def slice_plaquettes(config: GaugeConfig) -> np.ndarray:
    c = _cos_table(config.lattice.N)
    return c[config.ps].mean(axis=1)


def binned_mean(samples, bin_size: int = 100) -> tuple[float, float]:
    """Mean and standard error from non-overlapping bins."""
    x = np.asarray(samples, dtype=float)
    nb = len(x) // bin_size
    if nb < 2:
        return float(x.mean()) if len(x) else float("nan"), float("nan")
    bins = x[: nb * bin_size].reshape(nb, bin_size).mean(axis=1)
    return float(bins.mean()), float(bins.std(ddof=1) / np.sqrt(nb))


@dataclass
class PlaquetteResult:
    beta: float
    mean: float
    error: float
    acceptance: float
    samples: np.ndarray


def run_chain(g: GaugeLattice, beta: float, therm: int, meas: int, rng: np.random.Generator,
              start: str | GaugeConfig = "cold", beta_t: float | None = None, bin_size: int = 100,
              observers=()):
    """Thermalize then measure the spatial plaquette every sweep."""
    beta_t = beta if beta_t is None else beta_t
    if isinstance(start, GaugeConfig):
        cfg = start
    elif start == "cold":
        cfg = cold_start(g)
    elif start == "hot":
        cfg = hot_start(g, rng)
    else:
        raise GaugeError("start must be 'hot', 'cold' or a configuration")
    for _ in range(therm):
        metropolis_sweep(cfg, beta, beta_t, rng)
    samples = np.empty(meas)
    acc = 0.0
    for k in range(meas):
        acc += metropolis_sweep(cfg, beta, beta_t, rng)
        samples[k] = mean_spatial_plaquette(cfg)
        for obs in observers:
            obs(cfg)
    m, e = binned_mean(samples, bin_size)
    return PlaquetteResult(beta, m, e, acc / max(meas, 1), samples), cfg


def beta_scan(g: GaugeLattice, betas, therm: int, meas: int, seed: int, start: str = "cold",
              bin_size: int = 100) -> list[PlaquetteResult]:
    """Independent chains per beta, stream k = index of beta."""
    out = []
    for k, b in enumerate(betas):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k,))))
        out.append(run_chain(g, b, therm, meas, rng, start, bin_size=bin_size)[0])
    return out


@dataclass
class HysteresisResult:
    betas: np.ndarray
    up: list[PlaquetteResult]  # beta increasing, hot start
    down: list[PlaquetteResult]  # beta decreasing, cold start (stored in ascending beta order)
    area: float
    replicas: int = 1

    def separation(self) -> np.ndarray:
        """|up - down| in units of the combined standard error."""
        d = np.array([abs(a.mean - b.mean) for a, b in zip(self.up, self.down)])
        e = np.array([np.hypot(a.error, b.error) for a, b in zip(self.up, self.down)])
        return d / np.where(e > 0, e, np.inf)


def _branch(g, betas, cfg, discard, meas, rng, bin_size):
    out = []
    for b in betas:
        r, cfg = run_chain(g, b, discard, meas, rng, cfg, bin_size=bin_size)
        out.append(r)
    return out


def _combine(beta, runs: list[PlaquetteResult]) -> PlaquetteResult:
    means = np.array([r.mean for r in runs])
    err = float(means.std(ddof=1) / np.sqrt(len(means)))
    return PlaquetteResult(beta, float(means.mean()), err, float(np.mean([r.acceptance for r in runs])), means)


def hysteresis_scan(g: GaugeLattice, betas, sweeps_per_beta: int, seed: int,
                    discard: int | None = None, bin_size: int | None = None,
                    replicas: int = 1) -> HysteresisResult:
    """Two chains swept through ``betas``: ascending from a hot start, descending from a cold start.

    At each beta the chain runs ``sweeps_per_beta`` sweeps; the first
    ``discard`` (default: a fifth) are dropped before measuring.  With
    ``replicas`` > 1 the scan is repeated on independent streams and each
    point reports the replica mean with the replica standard error, which
    stays honest when chains tunnel between phases.  Replica ``r`` uses
    streams ``(2r,)`` (ascending) and ``(2r + 1,)`` (descending).
    """
    if replicas < 1:
        raise GaugeError("replicas must be >= 1")
    betas = np.sort(np.asarray(betas, dtype=float))
    discard = sweeps_per_beta // 5 if discard is None else discard
    meas = sweeps_per_beta - discard
    bin_size = bin_size or max(1, meas // 20)
    ups, downs = [], []
    for r in range(replicas):
        rng_up = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(2 * r,))))
        rng_dn = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(2 * r + 1,))))
        ups.append(_branch(g, betas, hot_start(g, rng_up), discard, meas, rng_up, bin_size))
        downs.append(_branch(g, betas[::-1], cold_start(g), discard, meas, rng_dn, bin_size)[::-1])
    if replicas == 1:
        up, down = ups[0], downs[0]
    else:
        up = [_combine(b, [u[k] for u in ups]) for k, b in enumerate(betas)]
        down = [_combine(b, [d[k] for d in downs]) for k, b in enumerate(betas)]
    diff = np.array([a.mean - c.mean for a, c in zip(up, down)])
    area = float(np.trapezoid(np.abs(diff), betas)) if len(betas) > 1 else 0.0
    return HysteresisResult(betas, up, down, area, replicas)


# --------------------------------------------------------------------------
# Wilson loops


def _min_image(d: np.ndarray, period: int) -> np.ndarray:
    return (d + period // 2) % period - period // 2


def zigzag_paths(g: GaugeLattice, length: int) -> list[tuple[list[tuple[int, int]], int, int]]:
    """Straight zig-zag geodesics of ``length`` bonds starting at cyan vertices.

    Each path alternates two fixed bond directions; returned as
    (list of (bond, +1 forward / -1 backward), start vertex, end vertex).
    Only direction pairs whose paths are graph geodesics are kept.
    """
    period = 2 * g.L
    coords = g.vertex_coords
    vec = {}
    for b, (i, j) in enumerate(g.bond_ends):
        vec[b] = tuple(_min_image(coords[j] - coords[i], period))
    dirs = sorted(set(vec.values()))
    by_vertex_dir = {}
    for b, (i, j) in enumerate(g.bond_ends):
        by_vertex_dir[(int(i), vec[b])] = (b, int(j), 1)
        by_vertex_dir[(int(j), tuple(-np.array(vec[b])))] = (b, int(i), -1)
    dist_cache = {}

    def bfs(src):
        if src not in dist_cache:
            adj = [[] for _ in range(g.n_vertices)]
            for (a, c) in g.bond_ends:
                adj[a].append(c)
                adj[c].append(a)
            d = -np.ones(g.n_vertices, int)
            d[src] = 0
            q = [src]
            for x in q:
                for y in adj[x]:
                    if d[y] < 0:
                        d[y] = d[x] + 1
                        q.append(y)
            dist_cache[src] = d
        return dist_cache[src]

    cyan = [v for v, k in enumerate(g.vertex_kind) if k == "cyan"]
    out = []
    for a in dirs:
        for c in dirs:
            if a == c:
                continue
            steps = [a if k % 2 == 0 else tuple(-np.array(c)) for k in range(length)]
            paths = []
            ok = True
            for v0 in cyan:
                v = v0
                links = []
                for st in steps:
                    b, w, sgn = by_vertex_dir[(v, st)]
                    links.append((b, sgn))
                    v = w
                if bfs(v0)[v] != length:
                    ok = False
                    break
                paths.append((links, v0, v))
            if ok:
                out.extend(paths)
    return out


@numba.njit(cache=True)
def _wilson_sum(s, u, path_bonds, path_dirs, starts, ends, T, N, cos_t):
    Lt = s.shape[0]
    total = 0.0
    for p in range(path_bonds.shape[0]):
        for t in range(Lt):
            acc = 0
            for k in range(path_bonds.shape[1]):
                b = path_bonds[p, k]
                acc += path_dirs[p, k] * (s[t, b] - s[(t + T) % Lt, b])
            for dt in range(T):
                acc += u[(t + dt) % Lt, ends[p]] - u[(t + dt) % Lt, starts[p]]
            total += cos_t[acc % N]
    return total / (path_bonds.shape[0] * Lt)


@dataclass
class WilsonShape:
    spatial: int
    temporal: int
    bonds: np.ndarray
    dirs: np.ndarray
    starts: np.ndarray
    ends: np.ndarray

    @property
    def area(self) -> int:
        return self.spatial * self.temporal

    @property
    def perimeter(self) -> int:
        return 2 * (self.spatial + self.temporal)


def wilson_shapes(g: GaugeLattice, sizes) -> list[WilsonShape]:
    out = []
    for ls, lt in sizes:
        if ls < 1 or lt < 1:
            raise GaugeError("loop sides must be positive")
        if lt >= g.Lt or ls >= g.L:
            raise GaugeError("loop larger than the lattice")
        paths = zigzag_paths(g, ls)
        if not paths:
            raise GaugeError("no geodesic zig-zag path of that length")
        out.append(WilsonShape(
            ls, lt,
            np.array([[b for b, _ in p[0]] for p in paths], dtype=np.int64),
            np.array([[d for _, d in p[0]] for p in paths], dtype=np.int64),
            np.array([p[1] for p in paths], dtype=np.int64),
            np.array([p[2] for p in paths], dtype=np.int64)))
    return out


def wilson_value(config: GaugeConfig, shape: WilsonShape) -> float:
    g = config.lattice
    return float(_wilson_sum(config.s, config.u, shape.bonds, shape.dirs, shape.starts, shape.ends,
                             shape.temporal, g.N, _cos_table(g.N)))


def fit_through_origin(x, y) -> tuple[float, float]:
    """Slope and (centered) R^2 of y = c x."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    c = float(x @ y / (x @ x))
    ss_res = float(((y - c * x) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return c, (1.0 - ss_res / ss_tot) if ss_tot > 0 else float("nan")


@dataclass
class WilsonReport:
    beta: float
    sizes: list
    values: list
    errors: list
    area_coef: float
    area_r2: float
    perimeter_coef: float
    perimeter_r2: float

    @property
    def preferred(self) -> str:
        return "area" if self.area_r2 > self.perimeter_r2 else "perimeter"

    def to_dict(self) -> dict:
        return {"beta": self.beta, "sizes": [list(s) for s in self.sizes], "W": self.values,
                "W_err": self.errors, "area": {"c": self.area_coef, "r2": self.area_r2},
                "perimeter": {"c": self.perimeter_coef, "r2": self.perimeter_r2},
                "preferred": self.preferred}


def wilson_loop_scan(g: GaugeLattice, beta: float, sizes, therm: int, meas: int, seed: int,
                     start: str = "cold", bin_size: int = 100, beta_t: float | None = None) -> WilsonReport:
    """Measure <W(C)> for spatial x temporal rectangles and fit area vs perimeter laws.

    Loops whose mean is not positive are left out of the fits.
    """
    shapes = wilson_shapes(g, sizes)
    rec = [[] for _ in shapes]

    def observe(cfg):
        for k, sh in enumerate(shapes):
            rec[k].append(wilson_value(cfg, sh))

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0,))))
    run_chain(g, beta, therm, meas, rng, start, beta_t=beta_t, bin_size=bin_size, observers=(observe,))
    vals, errs = [], []
    for r in rec:
        m, e = binned_mean(r, bin_size)
        vals.append(m)
        errs.append(e)
    ok = [k for k, v in enumerate(vals) if v > 0]
    y = [-np.log(vals[k]) for k in ok]
    ac, ar2 = fit_through_origin([shapes[k].area for k in ok], y)
    pc, pr2 = fit_through_origin([shapes[k].perimeter for k in ok], y)
    return WilsonReport(beta, [(s.spatial, s.temporal) for s in shapes], vals, errs, ac, ar2, pc, pr2)
