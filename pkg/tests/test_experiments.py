import math

import numpy as np
import pytest

from tensor_rtc import (
    AdmmConfig,
    EmptySet,
    IdenticalInputs,
    InvalidSpec,
    ObservationMask,
    SyntheticSpec,
    ZeroReference,
    gen_instance,
    lemma1_check,
    lemma4_check,
    psnr,
    rel_error,
    rmse,
    run_phase_grid,
    run_recovery_table,
    run_trial,
    tubal_ranks,
)
from tensor_rtc.experiments import (
    cell_seed,
    sign_tensor,
    summarize_table,
    table1_scenarios,
    table2_scenarios,
)

# --- instances ---------------------------------------------------------------


def test_clean_full_instance():
    inst = gen_instance(SyntheticSpec((6, 5, 3), 2, rho=1.0, gamma=0.0, seed=1))
    np.testing.assert_array_equal(inst.x, inst.l0)
    assert not inst.support.any() and inst.mask.observed.all()


def test_generated_rank():
    inst = gen_instance(SyntheticSpec((30, 30, 10), 3, seed=11))
    assert tubal_ranks(inst.l0, 1e-8).tubal_rank == 3


def test_corruption_cardinality():
    inst = gen_instance(SyntheticSpec((20, 20, 5), 2, rho=1.0, gamma=0.1, seed=0))
    assert inst.support.sum() == 200
    changed = inst.x != inst.l0
    assert not (changed & ~inst.support).any()


def test_corruption_lies_in_observed_set():
    inst = gen_instance(SyntheticSpec((20, 20, 5), 2, rho=0.5, gamma=0.2, seed=0))
    assert inst.support.sum() == 200  # 0.2 of the 1000 observed entries
    assert not (inst.support & ~inst.mask.observed).any()
    assert not inst.x[~inst.mask.observed].any()
    every = gen_instance(SyntheticSpec((20, 20, 5), 2, rho=0.5, gamma=0.2, seed=0, corrupt_all=True))
    assert every.support.sum() == 400


@pytest.mark.parametrize("dist", ["gaussian", "uniform", "bernoulli"])
def test_factor_distributions(dist):
    inst = gen_instance(SyntheticSpec((10, 10, 4), 2, factor_dist=dist, seed=0))
    assert tubal_ranks(inst.l0).tubal_rank == 2


def test_instances_are_reproducible():
    spec = SyntheticSpec((8, 8, 4), 2, 0.7, 0.1, seed=9)
    a, b = gen_instance(spec), gen_instance(spec)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.mask.observed, b.mask.observed)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dims=(5, 5, 2), rank=6),
        dict(dims=(5, 5, 2), rank=0),
        dict(dims=(5, 5, 2), rank=1, rho=0.0),
        dict(dims=(5, 5, 2), rank=1, gamma=1.5),
        dict(dims=(5, 5, 2), rank=1, corruption_std=-1.0),
        dict(dims=(5, 0, 2), rank=1),
        dict(dims=(5, 5, 2), rank=1, factor_dist="cauchy"),
    ],
)
def test_invalid_spec(kwargs):
    with pytest.raises(InvalidSpec):
        SyntheticSpec(**kwargs)


# --- metrics -----------------------------------------------------------------


def test_rel_error_examples(rng):
    l0 = rng.standard_normal((3, 4, 2))
    assert rel_error(l0, l0) == 0.0
    assert rel_error(np.zeros_like(l0), l0) == 1.0
    assert rel_error(1.1 * l0, l0) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ZeroReference):
        rel_error(l0, np.zeros_like(l0))


def test_rmse_examples(rng):
    x = rng.standard_normal((3, 3, 2))
    m = ObservationMask.from_indices(x.shape, [(i, j, k) for i in range(3) for j in range(3) for k in range(2)
                                               if (i, j, k) != (1, 1, 1)])
    assert rmse(x, x, m) == 0.0
    l = x.copy()
    l[1, 1, 1] += 2.0
    assert rmse(l, x, m) == pytest.approx(2.0)
    with pytest.raises(EmptySet):
        rmse(x, x, ObservationMask.full(x.shape))


def test_rmse_naive_oracle(rng):
    l, x = rng.standard_normal((4, 3, 2)), rng.standard_normal((4, 3, 2))
    m = ObservationMask(rng.random((4, 3, 2)) < 0.6)
    total, count = 0.0, 0
    for idx in np.ndindex(*x.shape):
        if not m.observed[idx]:
            total += (l[idx] - x[idx]) ** 2
            count += 1
    assert rmse(l, x, m) == pytest.approx(math.sqrt(total / count), abs=1e-12)


def test_psnr_examples(rng):
    ref = np.zeros((2, 2, 1))
    assert psnr(ref + 1.0, ref) == pytest.approx(0.0, abs=1e-12)
    assert psnr(ref + 0.1, ref) == pytest.approx(20.0, abs=1e-9)
    a = rng.integers(0, 256, (4, 4, 3)) / 255
    b = rng.integers(0, 256, (4, 4, 3)) / 255
    mse = sum((p - q) ** 2 for p, q in zip(a.ravel(), b.ravel())) / a.size
    assert psnr(a, b) == pytest.approx(10 * math.log10(1 / mse), abs=1e-9)
    with pytest.raises(IdenticalInputs):
        psnr(a, a)


# --- trials and tables -------------------------------------------------------


def test_success_flag_flips_at_tolerance():
    spec = SyntheticSpec((10, 10, 4), 3, 0.5, 0.3, seed=0)
    cfg = AdmmConfig(max_iters=30)
    err = run_trial(spec, cfg).rel_error
    assert run_trial(spec, cfg, success_tol=err).success
    assert not run_trial(spec, cfg, success_tol=np.nextafter(err, 0)).success


def test_trial_determinism():
    spec = SyntheticSpec((12, 12, 4), 2, 0.8, 0.1, seed=5)
    a, b = run_trial(spec), run_trial(spec)
    assert a.rel_error == b.rel_error and a.recovered_rank == b.recovered_rank


def test_scenario_presets():
    t1 = table1_scenarios(40)
    assert [(s.rank, s.rho, s.gamma) for s in t1[::3]] == [(2, 0.9, 0.1), (4, 0.8, 0.2)]
    assert len(t1) == 6 and t1[0].dims == (40, 40, 40)
    assert sorted({s.corruption_std for s in table2_scenarios(40)}) == [1 / 40, 1.0, 40.0]
    # the full-size rows are rank 5 and 10
    assert [s.rank for s in table1_scenarios(100, seeds=(0,))] == [5, 10]


def test_recovery_table_rows():
    scen = [SyntheticSpec((12, 12, 6), 1, 0.9, 0.1, seed=s) for s in (0, 1)]
    rows = run_recovery_table(scen)
    assert len(rows) == 2
    assert {"n", "r", "rank", "rel_error"} <= rows[0].keys()
    summary = summarize_table(rows)
    assert len(summary) == 1 and summary[0]["trials"] == 2
    assert summary[0]["rel_error"] == pytest.approx(np.median([r["rel_error"] for r in rows]))


# --- phase grid --------------------------------------------------------------


def test_cell_seeds_are_distinct():
    seeds = {cell_seed(0, a, b, t) for a in range(8) for b in range(8) for t in range(5)}
    assert len(seeds) == 320
    assert cell_seed(3, 1, 2, 0) == cell_seed(3, 1, 2, 0)


def test_phase_grid_extreme_cells():
    hard = run_phase_grid([10], [0.9], rho=0.5, n=10, trials=2)
    assert hard.success[0, 0] == 0.0
    easy = run_phase_grid([1], [0.0], rho=0.9, n=20, trials=3)
    assert easy.success[0, 0] == 1.0
    assert easy.success.shape == (1, 1) and easy.trials == 3


def test_phase_grid_parallel_matches_serial():
    kw = dict(ranks=[1, 3], gammas=[0.0, 0.3], rho=0.7, n=10, n3=4, trials=2, base_seed=5)
    serial = run_phase_grid(jobs=1, **kw)
    parallel = run_phase_grid(jobs=2, **kw)
    np.testing.assert_array_equal(serial.success, parallel.success)
    assert set(np.unique(serial.success)) <= {0.0, 0.5, 1.0}


# --- lemma checks ------------------------------------------------------------


def test_lemma1_full_sampling_is_exact():
    assert np.all(np.abs(lemma1_check(10, 2, 1.0, trials=3)) <= 1e-9)


def test_lemma1_shrinks_with_rate():
    lo = np.median(lemma1_check(12, 1, 0.3, trials=4))
    hi = np.median(lemma1_check(12, 1, 0.9, trials=4))
    assert hi < lo


def test_sign_tensor_distribution():
    s = sign_tensor((50, 50, 10), 0.2, rng=0)
    assert set(np.unique(s)) <= {-1.0, 0.0, 1.0}
    assert abs((s != 0).mean() - 0.2) < 0.01
    assert abs((s == 1).mean() - 0.1) < 0.01
    assert not sign_tensor((3, 3, 3), 0.0, rng=0).any()


def test_lemma4_examples():
    vals = lemma4_check(20, 5, [0.0, 0.1, 0.5], draws=3)
    assert vals.shape == (3, 3)
    assert not vals[0].any()
    assert np.median(vals[1]) < np.median(vals[2])
    with pytest.raises(ValueError):
        lemma4_check(5, 2, [1.5])
