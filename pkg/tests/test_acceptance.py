"""Acceptance gates, one test per criterion; each prints a PASS/FAIL line."""

import numpy as np
import pytest

from stcode.analysis import analyze_subspace_limit, constructed_logicals, membrane_identity, verify_identity, zn_verify
from stcode.dual import dual_diamond_map, gauss_law_report
from stcode.gauge import build_euclidean_lattice, hysteresis_scan, wilson_loop_scan
from stcode.lattice import LatticeSpec, commutation_report
from stcode.matching import DefectGraph, brute_force_match, matching_weight, min_weight_match
from stcode.pauli import commutation_matrix
from stcode.ssec import NoiseModel, SSECContext, run_protocol, run_trials

from conftest import lattice, structure

TORUS = [((2, 2, 2), "Periodic3Torus"), ((4, 4, 4), "Periodic3Torus")]
KV = [((2, 2, 3), "OpenZ_KV"), ((4, 4, 3), "OpenZ_KV")]


def test_algebraic_suite(report):
    bad = []
    for dims, boundary in TORUS + KV:
        lat = lattice(dims, boundary)
        rep = commutation_report(lat)
        if boundary == "Periodic3Torus":
            for subset in ("BR", "GY"):
                g = gauss_law_report(lat, dual_diamond_map(lat, subset))
                rep.update({f"{subset}_{k}": v for k, v in g.items()})
        bad += [f"{dims} {boundary} {k}" for k, v in rep.items() if not v]
    assert report("1 algebraic suite", not bad, ", ".join(bad) or "all identities exact")


def test_logical_counts(report):
    cases = [((2, 2, 2), "Periodic3Torus", 0), ((4, 4, 4), "Periodic3Torus", 0),
             ((2, 2, 3), "OpenZ_KV", 2), ((4, 4, 3), "OpenZ_KV", 2),
             ((2, 2, 3), "OpenZ_WrongA", 0), ((4, 4, 3), "OpenZ_WrongA", 0),
             ((2, 2, 3), "OpenZ_WrongB", 0), ((4, 4, 3), "OpenZ_WrongB", 0)]
    got = {(d, b): structure(d, b).k for d, b, _ in cases}
    for L in (2, 4):
        for keep in ("Zchecks+Xcubes", "Xchecks+Zcubes"):
            got[(L, keep)] = analyze_subspace_limit(lattice((L, L, L)), keep).k
    want = {(d, b): k for d, b, k in cases}
    want.update({(L, keep): 3 for L in (2, 4) for keep in ("Zchecks+Xcubes", "Xchecks+Zcubes")})
    wrong = {k: v for k, v in got.items() if v != want[k]}
    assert report("2 logical counts", not wrong, f"mismatches {wrong}" if wrong else f"{len(got)} cases exact")


def test_bare_logical_structure(report):
    ok = True
    for dims, boundary in KV:
        lat = lattice(dims, boundary)
        s = structure(dims, boundary)
        cons = constructed_logicals(lat, s)
        by, gr = cons["by"], cons["gr"]
        words = lat.words()
        for fam in (by, gr):
            ok &= not np.any(commutation_matrix(fam["X"] + fam["Z"], words))
        C = commutation_matrix(by["X"], by["Z"]) % 2
        ok &= np.array_equal(C, np.eye(len(by["X"]), dtype=C.dtype)) and len(by["X"]) == 2
        ok &= all(verify_identity([a], [b], s.gauge_group)
                  for kind in ("X", "Z") for a, b in zip(by[kind], gr[kind]))
        ok &= all(membrane_identity(lat, z, "X") for z in range(1, dims[2]))
    for dims, _ in TORUS:
        lat = lattice(dims)
        ok &= all(membrane_identity(lat, z, kind) for z in range(1, dims[2]) for kind in ("X", "Z"))
    assert report("3 bare-logical structure", bool(ok), "anticommuting pairs, BY = GR mod gauge, membranes")


def test_matching_oracle(report):
    rng = np.random.default_rng(20240)
    mismatches = 0
    for i in range(200):
        n = int(rng.integers(0, 11))
        boundary = bool(rng.integers(0, 2))
        if not boundary and n % 2:
            n -= 1
        w = rng.integers(0, 30, (n, n))
        w = np.triu(w, 1) + np.triu(w, 1).T
        g = DefectGraph(w, rng.integers(0, 30, n) if boundary else None)
        mismatches += matching_weight(g, min_weight_match(g)) != brute_force_match(g)[0]
    assert report("4 matching oracle", mismatches == 0, f"{200 - mismatches}/200 graphs equal brute force")


def test_ssec_noiseless(report):
    spec = LatticeSpec((4, 4, 4), "OpenZ_KV")
    fails = {seq: run_trials(spec, seq, 2, NoiseModel(), 10_000, 1)["failures"]
             for seq in ("standard", "ybgr", "ybrg")}
    assert report("5a noiseless SSEC", not any(fails.values()), f"failures over 10^4 trials {fails}")


def test_ssec_size_suppression(report):
    noise = NoiseModel(0.005, 0.005)
    small = run_trials(LatticeSpec((2, 2, 2), "OpenZ_KV"), "standard", 4, noise, 20_000, 2)
    large = run_trials(LatticeSpec((4, 4, 4), "OpenZ_KV"), "standard", 4, noise, 20_000, 2)
    ok = large["wilson_hi"] < small["wilson_lo"]
    detail = (f"L=2 {small['rate']:.4f} [{small['wilson_lo']:.4f}, {small['wilson_hi']:.4f}], "
              f"L=4 {large['rate']:.4f} [{large['wilson_lo']:.4f}, {large['wilson_hi']:.4f}]")
    assert report("5b failure rate falls with L", ok, detail)


def test_ssec_sequences_agree(report):
    lat = lattice((2, 2, 3), "OpenZ_KV")
    ctx = SSECContext.build(lat)
    noise = NoiseModel(0.03, 0.0)
    differ = nontrivial = 0
    for t in range(300):
        backend = "tableau" if t < 20 else "frame"
        a, b = (run_protocol(lat, s, 3, noise, 5, t, backend, ctx, record=True) for s in ("ybgr", "ybrg"))
        ca = [d["charges"] for d in a.decisions]
        differ += ca != [d["charges"] for d in b.decisions]
        nontrivial += any(ca)
    ok = differ == 0 and nontrivial > 0
    assert report("5c ybgr/ybrg syndromes identical", ok, f"{differ} differing of 300, {nontrivial} with charges")


def test_gauge_transition(report):
    g = build_euclidean_lattice(6, 6)
    betas = np.round(np.arange(0.40, 0.4801, 0.005), 4)
    h = hysteresis_scan(g, betas, 300, seed=11, replicas=8)
    up = np.array([r.mean for r in h.up])
    down = np.array([r.mean for r in h.down])
    sep = h.separation()
    k = int(np.argmax(sep))
    ju, jd = np.diff(up), np.diff(down)
    iu, idn = int(np.argmax(ju)), int(np.argmax(jd))
    beta_up = 0.5 * (betas[iu] + betas[iu + 1])
    beta_dn = 0.5 * (betas[idn] + betas[idn + 1])
    beta_star = 0.5 * (beta_up + beta_dn)
    hyst = sep[k] > 3 and up[k] < down[k]
    jump = min(ju[iu], jd[idn]) >= 0.1 and abs(beta_star - 0.44) <= 0.02
    report("6 plaquette hysteresis", hyst,
           f"max separation {sep[k]:.1f} sigma at beta={betas[k]}, up {up[k]:.3f} down {down[k]:.3f}")
    report("6 plaquette jump near 0.44", jump,
           f"jumps {ju[iu]:.3f} (up, {beta_up:.4f}) {jd[idn]:.3f} (down, {beta_dn:.4f}), beta*={beta_star:.4f}")

    fits = {}
    for beta, law in ((0.30, "area"), (0.55, "perimeter")):
        w = wilson_loop_scan(g, beta, [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (2, 3), (3, 2)],
                             2000, 10_000, seed=1)
        r2 = {"area": w.area_r2, "perimeter": w.perimeter_r2}
        other = "perimeter" if law == "area" else "area"
        fits[beta] = (w.preferred == law and r2[law] - r2[other] >= 0.1, r2)
    ok_w = all(v[0] for v in fits.values())
    detail = "; ".join(f"beta={b}: area R2 {r['area']:.3f}, perimeter R2 {r['perimeter']:.3f}"
                       for b, (_, r) in fits.items())
    report("6 Wilson loop laws", ok_w, detail)
    assert hyst and jump and ok_w


@pytest.mark.parametrize("N", [2, 3, 5])
def test_zn_verification(report, N):
    res = {L: zn_verify(N, L) for L in (2, 4)}
    ok = all(r["all commutation identities hold"] for r in res.values())
    if N == 2:
        ok &= all(r["n2_reduction_matches"] for r in res.values())
    assert report(f"7 Z_{N} verification", ok, "L=2,4 commutation and alternating hexagon patterns")
