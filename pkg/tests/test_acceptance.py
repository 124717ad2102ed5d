"""Shipping gate: the eleven acceptance criteria, one test per criterion.

Each test prints one criterion line (visible with -rA or on failure) and
asserts it.  The two benchmark batches are module-scoped fixtures so the
determinism criterion can replay exactly the runs the other criteria graded.
"""

import json
import math
import os
import time

import numpy as np
import numpy.testing as npt
import pytest

from conewton import cli, cones, ncp, problems, solver
from conewton.solver import SolverConfig, solve

from .oracles import circular_closed_form, fd_jacobian, orthant_image_projection

# per-attempt iteration budget and perturb draws for the completion grid;
# together they realize the 300 s per-instance cap deterministically
LOWRANK_MAXITER = 800
LOWRANK_DRAWS = 5
LOWRANK_ESC_DRAWS = 4
LOWRANK_ESC_MAXITER = 1500
LOWRANK_FINISH = 6000


def _criterion(num, ok, detail):
    print(f"\ncriterion {num:02d}: {'PASS' if ok else 'FAIL'} - {detail}",
          flush=True)
    assert ok, f"criterion {num:02d}: {detail}"


def _acceptance_cones(rng):
    m_full = rng.normal(size=(10, 10)) + 3.0 * np.eye(10)
    m_rank_def = rng.normal(size=(10, 5)) @ rng.normal(size=(5, 8))
    return [
        ("orthant", cones.nonneg_orthant(7)),
        ("soc", cones.second_order(6)),
        ("circular-pi/12", cones.circular(6, math.pi / 12)),
        ("circular-pi/6", cones.circular(6, math.pi / 6)),
        ("circular-pi/4", cones.circular(6, math.pi / 4)),
        ("circular-pi/3", cones.circular(6, math.pi / 3)),
        ("psd-8", cones.psd(8)),
        ("product", cones.product(cones.nonneg_orthant(2),
                                  cones.second_order(3),
                                  cones.circular(3, math.pi / 6))),
        ("simplicial-full", cones.simplicial(m_full, cones.nonneg_orthant(10))),
        ("simplicial-rankdef",
         cones.simplicial(m_rank_def, cones.nonneg_orthant(8))),
    ]


def test_criterion_01_projection_invariant_suite():
    t0 = time.time()
    rng = np.random.default_rng(101)
    samples = 1000
    for name, cone in _acceptance_cones(rng):
        for _ in range(samples):
            x = 2.0 * rng.normal(size=cone.dim)
            y = 2.0 * rng.normal(size=cone.dim)
            px = cones.project(cone, x)
            py = cones.project(cone, y)
            step = np.linalg.norm(x - y)
            assert np.linalg.norm(px - py) <= step * (1 + 1e-12), name
            # Moreau split: polar part complements and is orthogonal
            polar = x - px
            scale = max(1.0, float(x @ x))
            assert abs(px @ polar) <= 1e-10 * scale, name
            npt.assert_allclose(-cones.project_dual(cone, -x), polar,
                                rtol=0, atol=1e-10 * math.sqrt(scale),
                                err_msg=name)
            v = cones.clarke_element(cone, x)
            assert np.max(np.abs(v - v.T)) <= 1e-10, name
            eig = np.linalg.eigvalsh(v)
            assert eig[0] >= -1e-10 and eig[-1] <= 1 + 1e-10, name
            pscale = max(1.0, float(np.linalg.norm(px)))
            assert np.linalg.norm(v @ x - px) <= 1e-10 * pscale, name
            # linearization error bound: never exceeds the step itself
            assert (np.linalg.norm(py - px - v @ (y - x))
                    <= step * (1 + 1e-10)), name
    dt = time.time() - t0
    _criterion(1, dt < 60.0,
               f"{samples} samples x {len(_acceptance_cones(rng))} families, "
               f"all projection invariants hold, {dt:.1f}s (< 60s)")


def test_criterion_02_strong_semismooth_decay():
    t0 = time.time()
    rng = np.random.default_rng(202)
    for name, cone in _acceptance_cones(rng):
        for _ in range(50):
            x = 2.0 * rng.normal(size=cone.dim)
            d = rng.normal(size=cone.dim)
            d /= np.linalg.norm(d)
            ratios = []
            for t in (1e-1, 1e-2, 1e-3, 1e-4):
                h = t * d
                v = cones.clarke_element(cone, x + h)
                err = np.linalg.norm(cones.project(cone, x + h)
                                     - cones.project(cone, x) - v @ h)
                ratios.append(err / t ** 2)
            floor = max(ratios[0], 1e-6)
            assert max(ratios) <= 10.0 * floor, (name, ratios)
    dt = time.time() - t0
    _criterion(2, dt < 30.0,
               f"50 (x, d) draws per family keep the quadratic ratio within "
               f"10x its 1e-1 value, {dt:.1f}s (< 30s)")


def test_criterion_03_simplicial_oracle_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(303)
    done = 0
    while done < 50:
        mat = rng.normal(size=(2, 2))
        if abs(np.linalg.det(mat)) < 0.1:
            continue  # keep the oracle comparison well conditioned
        done += 1
        cone = cones.simplicial(mat, cones.nonneg_orthant(2))
        x = 3.0 * rng.normal(size=2)
        p = cones.project(cone, x)
        p_oracle, _ = orthant_image_projection(mat, x)
        npt.assert_allclose(p, p_oracle, rtol=0, atol=1e-8)

    for omega in (math.pi / 6, math.pi / 3):
        mat = np.diag([1.0 / math.tan(omega), 1.0, 1.0])
        cone = cones.simplicial(mat, cones.second_order(3))
        for _ in range(50):
            x = 3.0 * rng.normal(size=3)
            npt.assert_allclose(cones.project(cone, x),
                                circular_closed_form(omega, x),
                                rtol=0, atol=1e-10)
    dt = time.time() - t0
    _criterion(3, dt < 10.0,
               f"50 orthant-image instances at 1e-8 plus diag(cot w, I) "
               f"closed-form agreement at 1e-10, {dt:.1f}s (< 10s)")


# ---------------------------------------------------------------------------
# benchmark fixtures shared by criteria 4, 6, 9, 11

CIRC_GRID = dict(n=200, m=50, omegas="pi/12,pi/6,pi/4,pi/3", seeds=10)


@pytest.fixture(scope="module")
def circular_batch(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("criterion6"))
    config = SolverConfig(tol=1e-8, maxiter=100)
    flags = {
        "n": CIRC_GRID["n"], "m": CIRC_GRID["m"],
        "omegas": CIRC_GRID["omegas"], "seeds": CIRC_GRID["seeds"],
        "seed_base": 0, "start": "SP0", "jobs": 1, "format": "csv",
        "config": config.to_dict(),
    }
    t0 = time.time()
    results = cli.run_circular(flags, out)
    return {"out": out, "results": results, "seconds": time.time() - t0}


@pytest.fixture(scope="module")
def lowrank_batch(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("criterion9"))
    config = SolverConfig(tol=1e-8, maxiter=LOWRANK_MAXITER,
                          progress_eps=1e-8)
    flags = {
        "n": 10, "p_values": [0.1, 0.2, 0.3], "ranks": [1, 2, 3],
        "seeds": 20, "seed_base": 0, "jobs": 1, "format": "csv",
        "time_cap": 300.0, "perturb_draws": LOWRANK_DRAWS,
        "config": config.to_dict(),
    }
    t0 = time.time()
    results = cli.run_lowrank(flags, out)
    return {"out": out, "results": results, "seconds": time.time() - t0}


def test_criterion_04_kkt_round_trip(lowrank_batch):
    checked = 0
    worst_cert = 0.0
    worst_embed = 0.0
    for omega_tok in ("pi/6", "pi/4"):
        omega = cli.parse_angle(omega_tok)
        for seed in range(5):
            inst = problems.generate_circular(CIRC_GRID["n"], CIRC_GRID["m"],
                                              omega, seed)
            red = problems.build_circular(inst)
            y0, s0 = problems.starting_point("SP0", seed, inst.n, inst.m)
            rep = solve(red, y0, s0, SolverConfig(tol=1e-8, maxiter=100))
            if rep.status != solver.SOLVED:
                continue
            checked += 1
            _, _, _, cert, hn = problems.circular_round_trip(
                inst, rep.x, rep.lam)
            worst_cert = max(worst_cert, cert.max_entry)
            assert cert.passes(1e-6)
            assert hn <= 10.0 * max(rep.final_h_norm, 1e-12)
            worst_embed = max(worst_embed, hn / max(rep.final_h_norm, 1e-12))

    solved_rows = [r for r in lowrank_batch["results"]
                   if r["status"] == solver.SOLVED][:8]
    for row in solved_rows:
        inst = problems.generate_completion(10, float(row["p"]),
                                            int(row["r_max"]), row["seed"])
        prob = problems.build_lowrank(inst)
        cfg = SolverConfig(tol=1e-8, maxiter=LOWRANK_MAXITER,
                           progress_eps=1e-8)
        draws = [("rowrank1", 0)] + [("perturb", j)
                                     for j in range(LOWRANK_DRAWS)]
        for strategy, j in draws:
            w0, lam0 = problems.completion_start(inst, strategy, draw=j)
            rep = solve(prob, w0, lam0, cfg)
            if rep.status == solver.SOLVED:
                break
        assert rep.status == solver.SOLVED
        checked += 1
        x, sigma, cert = ncp.recover_kkt(prob, rep.x, rep.lam)
        worst_cert = max(worst_cert, cert.max_entry)
        assert cert.passes(1e-6)
        lam_emb = sigma - prob.g_eval(x)
        h_opt, h_feas = ncp.residual_H(prob, x, lam_emb)
        hn = float(np.linalg.norm(np.concatenate([h_opt, h_feas])))
        assert hn <= 10.0 * max(rep.final_h_norm, 1e-12)
    _criterion(4, checked >= 15,
               f"{checked} Solved runs re-certified; worst certificate entry "
               f"{worst_cert:.2e} <= 1e-6, embeddings within 10x")


def _fd_accepts(margin_fn, draw_fn, prob, count=200, tol=1e-5):
    rng = np.random.default_rng(505)
    worst = 0.0
    accepted = 0
    while accepted < count:
        x, lam = draw_fn(rng)
        if not margin_fn(x, lam):
            continue
        accepted += 1
        it = ncp.Iterate(prob, x, lam)
        z = np.concatenate([x, lam])

        def system(zz):
            ho, hf = ncp.residual_H(prob, zz[:prob.x_dim], zz[prob.x_dim:])
            return np.concatenate([ho, hf])

        fd = fd_jacobian(system, z)
        scale = max(1.0, float(np.max(np.abs(it.jacobian))))
        err = float(np.max(np.abs(fd - it.jacobian))) / scale
        worst = max(worst, err)
        assert err <= tol, err
    return worst


def _circ_margin(tau):
    def margin(y, lam):
        u = np.linalg.norm(y[1:])
        return (abs(u - tau * y[0]) > 1e-3 * (1 + u)
                and abs(tau * u + y[0]) > 1e-3 * (1 + u))
    return margin


def _soc_margin(lam):
    u = np.linalg.norm(lam[1:])
    return (abs(u - lam[0]) > 1e-3 * (1 + u)
            and abs(u + lam[0]) > 1e-3 * (1 + u))


def test_criterion_05_jacobian_finite_difference():
    t0 = time.time()
    worst = 0.0

    inst = problems.generate_circular(12, 3, math.pi / 6, 0)
    red = problems.build_circular(inst)
    tau = math.tan(math.pi / 6)
    worst = max(worst, _fd_accepts(
        lambda y, lam: _circ_margin(tau)(y, lam),
        lambda rng: (3.0 * rng.standard_normal(12), rng.standard_normal(3)),
        red))

    comp = problems.generate_completion(5, 0.3, 2, 0)
    lr = problems.build_lowrank(comp)
    worst = max(worst, _fd_accepts(
        lambda w, lam: abs(lam[-1]) > 1e-3,
        lambda rng: (rng.standard_normal(lr.x_dim),
                     rng.standard_normal(lr.m)),
        lr))

    q_mat = np.eye(6) + 0.3 * np.diag(np.arange(6) - 2.5) / 2.5
    qp_orth = problems.build_identity_qp(q_mat, np.arange(6) - 3.0,
                                         cones.nonneg_orthant(6))
    worst = max(worst, _fd_accepts(
        lambda x, lam: np.min(np.abs(lam)) > 1e-3,
        lambda rng: (rng.standard_normal(6), rng.standard_normal(6)),
        qp_orth))

    qp_soc = problems.build_identity_qp(q_mat, np.arange(6) - 3.0,
                                        cones.second_order(6))
    worst = max(worst, _fd_accepts(
        lambda x, lam: _soc_margin(lam),
        lambda rng: (rng.standard_normal(6), rng.standard_normal(6)),
        qp_soc))

    dt = time.time() - t0
    _criterion(5, dt < 60.0,
               f"200 differentiable points x 4 families, worst relative "
               f"deviation {worst:.2e} <= 1e-5, {dt:.1f}s (< 60s)")


def test_criterion_06_circular_benchmark(circular_batch):
    results = circular_batch["results"]
    assert len(results) == 40
    solved = [r for r in results
              if r["status"] == solver.SOLVED
              and float(r["residual"]) <= 1e-8]
    med = float(np.median([r["iters"] for r in results]))
    ok = (len(solved) >= 36 and med <= 15.0
          and circular_batch["seconds"] < 120.0)
    _criterion(6, ok,
               f"n=200 m=50 grid: {len(solved)}/40 Solved at 1e-8 "
               f"(>= 36), median iterations {med:g} (<= 15), "
               f"{circular_batch['seconds']:.1f}s (< 120s)")


def test_criterion_07_identity_qp_uniqueness():
    t0 = time.time()
    n = 20
    rng = np.random.default_rng(707)
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q_mat = basis.T @ np.diag(np.linspace(0.5, 1.5, n)) @ basis
    q_mat = 0.5 * (q_mat + q_mat.T)
    gap = abs(np.linalg.norm(np.eye(n) - q_mat, 2) - 0.5)
    assert gap <= 1e-12  # spectrum endpoints pin the contraction factor
    q_vec = rng.standard_normal(n)
    for kcone in (cones.nonneg_orthant(n), cones.second_order(n)):
        prob = problems.build_identity_qp(q_mat, q_vec, kcone)
        assert prob.meta["contraction_certified"]
        sols = []
        for seed in range(10):
            x0, l0 = problems.starting_point("SP3", seed, n, n)
            rep = solve(prob, x0, l0, SolverConfig(tol=1e-10, maxiter=100))
            assert rep.status == solver.SOLVED
            sols.append(rep.x)
        spread = max(np.linalg.norm(a - b)
                     for i, a in enumerate(sols) for b in sols[i + 1:])
        assert spread <= 1e-6, spread
    dt = time.time() - t0
    _criterion(7, dt < 5.0,
               f"||I - Q|| = 0.5 at n=20: 10 random starts coincide "
               f"pairwise within 1e-6 on orthant and SOC, {dt:.1f}s (< 5s)")


def test_criterion_08_superlinear_tail():
    t0 = time.time()
    for seed in range(5):
        inst = problems.generate_circular(60, 15, math.pi / 6, seed)
        red = problems.build_circular(inst)
        y0, s0 = problems.starting_point("SP0", seed, 60, 15)
        rep = solve(red, y0, s0, SolverConfig(tol=1e-10, maxiter=100))
        assert rep.status == solver.SOLVED
        hist = rep.residual_history
        assert len(hist) >= 3
        tail = hist[-3:]
        for a, b in zip(tail, tail[1:]):
            assert b <= 1e3 * a ** 1.8, (seed, tail)
    dt = time.time() - t0
    _criterion(8, dt < 30.0,
               f"5 instances keep ||H_k+1|| <= 1e3 ||H_k||^1.8 over the "
               f"final three residuals, {dt:.1f}s (< 30s)")


def test_criterion_09_lowrank_grid(lowrank_batch):
    results = lowrank_batch["results"]
    assert len(results) == 180
    solved = [r for r in results if r["status"] == solver.SOLVED
              and float(r["residual"]) <= 1e-8]
    failures = [r for r in results if r["status"] != solver.SOLVED]
    worst_fail = max((float(r["residual"]) for r in failures), default=0.0)
    rate = len(solved) / len(results)
    ok = (rate >= 0.80 and worst_fail <= 1e-3
          and lowrank_batch["seconds"] < 7200.0)
    _criterion(9, ok,
               f"completion grid: {len(solved)}/180 stationary at 1e-8 "
               f"({100 * rate:.1f}% >= 80%), worst failure residual "
               f"{worst_fail:.2e} <= 1e-3, "
               f"{lowrank_batch['seconds']:.0f}s (< 7200s)")


def test_criterion_10_escape_step():
    t0 = time.time()
    prob, x0, lam0 = problems.escape_instance()
    before = ncp.Iterate(prob, x0, lam0)
    assert np.linalg.norm(before.grad_theta) <= 1e-12
    assert np.linalg.norm(before.grad_theta_feas) > 0.5
    rep = solve(prob, x0, lam0, SolverConfig(tol=1e-8, maxiter=1))
    after = ncp.Iterate(prob, rep.x, rep.lam)
    first = rep.trace[0]
    ok = (first.step_kind == "FeasEscape"
          and after.theta_feas < before.theta_feas
          and time.time() - t0 < 5.0)
    _criterion(10, ok,
               f"first step {first.step_kind}, theta_feas "
               f"{before.theta_feas:.6f} -> {after.theta_feas:.6f} "
               f"(strict decrease)")


def test_criterion_11_manifest_determinism(circular_batch, lowrank_batch,
                                           tmp_path):
    for batch, tag in ((circular_batch, "circ"), (lowrank_batch, "lowrank")):
        replay_dir = str(tmp_path / tag)
        rc = cli.main(["replay", os.path.join(batch["out"], "manifest.json"),
                       "--out", replay_dir])
        assert rc == 0
        with open(os.path.join(batch["out"], "results.csv"), "rb") as fh:
            first = fh.read()
        with open(os.path.join(replay_dir, "results.csv"), "rb") as fh:
            second = fh.read()
        assert first == second, f"{tag} replay diverged"
    _criterion(11, True,
               "criterion 6 and 9 manifests replay to byte-identical "
               "results.csv")
