import numpy as np
import pytest

from cookieless_ab import (
    DesignConfig,
    EstimationError,
    SyntheticSpec,
    ValidationError,
    corrected_te,
    expose_population,
    generate_population,
    ingest_log,
    make_keyed_log,
    records_to_site1_log,
    resample_scenario,
    summarize_cells,
    write_records_csv,
    write_site1_csv,
)
from cookieless_ab.logs import (
    read_records_jsonl,
    site1_log_to_records,
    write_records_jsonl,
)


def small_log(n=400, d=2, seed=3, p=0.5):
    spec = SyntheticSpec.from_deltas(
        mu10=1.0, mu20=0.0, mu13=1.5, mu23=0.2, delta1=0.5, delta2=-0.5,
        p_overlap=p, n_users=n, n_reps=1, seed=seed,
        covariate_dim=d, covariate_coeffs=(1.0,) * d,
    )
    pop = generate_population(spec)
    config = DesignConfig(alpha=0.7, cluster_salt=8)
    return spec, pop, config, expose_population(pop, config, seed=21)


def test_csv_round_trip_exact(tmp_path):
    _, _, _, log = small_log()
    path = tmp_path / "site1.csv"
    write_site1_csv(log, path)
    records, issues = ingest_log(path)
    assert issues == []
    back = records_to_site1_log(records)
    assert np.array_equal(back.outcomes, log.outcomes)
    assert np.array_equal(back.cluster_codes, log.cluster_codes)
    assert np.array_equal(back.treatment_codes, log.treatment_codes)
    assert np.array_equal(back.covariates, log.covariates)


def test_jsonl_round_trip_exact(tmp_path):
    _, _, _, log = small_log(n=60)
    path = tmp_path / "site1.jsonl"
    write_records_jsonl(site1_log_to_records(log), path)
    records, issues = read_records_jsonl(path)
    assert issues == []
    back = records_to_site1_log(records)
    assert np.array_equal(back.outcomes, log.outcomes)


def test_ingest_reports_bad_rows_with_line_numbers(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text(
        "cluster,treatment,outcome,x1\n"
        "C1,T1,1.25,0.1\n"
        "C9,T1,1.0,0.2\n"
        "C2,T2,not-a-number,0.3\n"
        "C2,T3,1.0,0.4\n"
        "C1,T2,0.5,\n"
        "C2,T1,0.75,1.5\n"
    )
    records, issues = ingest_log(path)
    assert len(records) == 2
    assert [i.line for i in issues] == [3, 4, 5, 6]
    assert "cluster" in issues[0].message
    assert "outcome" in issues[1].message
    assert "period 1" in issues[2].message
    assert "x1" in issues[3].message


def test_ingest_header_problems_raise(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("cluster,outcome\nC1,1.0\n")
    with pytest.raises(ValidationError, match="treatment"):
        ingest_log(path)
    path.write_text("cluster,treatment,outcome,x2\nC1,T1,1.0,0.5\n")
    with pytest.raises(ValidationError, match="x1"):
        ingest_log(path)
    path.write_text("cluster,treatment,outcome,clicks\nC1,T1,1.0,7\n")
    with pytest.raises(ValidationError, match="unrecognized"):
        ingest_log(path)


def test_ingest_empty_file_is_empty_dataset(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    records, issues = ingest_log(path)
    assert records == [] and issues == []


def test_ingest_binary_mode_rejects_fractions(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("cluster,treatment,outcome\nC1,T1,1\nC1,T2,0.25\n")
    records, issues = ingest_log(path, binary=True)
    assert len(records) == 1
    assert len(issues) == 1 and "binary" in issues[0].message


def test_keyed_log_round_trip_and_shape(tmp_path):
    spec, pop, config, _ = small_log(n=300, p=0.4)
    records = make_keyed_log(pop, config, seed=21)
    n_shared = int(pop.visits_both.sum())
    assert len(records) == 300 + n_shared
    assert all(r.user_key for r in records)
    path = tmp_path / "keyed.csv"
    write_records_csv(records, path)
    back, issues = ingest_log(path)
    assert issues == []
    assert len(back) == len(records)
    periods = {r.period for r in back}
    assert periods == {1, 2}
    for r in back:
        assert r.treatment in (("T1", "T2") if r.period == 1 else ("T3", "T4"))


def test_resample_p_zero_keeps_no_shared_exposure():
    spec, pop, config, _ = small_log(n=500, p=0.5)
    records = make_keyed_log(pop, config, seed=21)
    n_singles = 500 - int(pop.visits_both.sum())
    log = resample_scenario(records, 0.0, seed=1, config=config)
    assert log.n == n_singles


def test_resample_hits_target_within_binomial_band():
    spec, pop, config, _ = small_log(n=4000, p=0.5)
    records = make_keyed_log(pop, config, seed=21)
    n_shared = int(pop.visits_both.sum())
    n_single = 4000 - n_shared
    p_target = 0.3
    log = resample_scenario(records, p_target, seed=5, config=config)
    kept_shared = log.n - n_single
    q = p_target * n_single / (n_shared * (1 - p_target))
    sigma = np.sqrt(n_shared * q * (1 - q))
    assert abs(kept_shared - q * n_shared) <= 3 * sigma


def test_resample_attainable_max_uses_every_shared_user():
    spec, pop, config, _ = small_log(n=800, p=0.5)
    records = make_keyed_log(pop, config, seed=21)
    n_shared = int(pop.visits_both.sum())
    p_max = n_shared / 800
    log = resample_scenario(records, p_max, seed=5, config=config)
    assert log.n == 800


def test_resample_unattainable_target_reports_maximum():
    spec, pop, config, _ = small_log(n=800, p=0.3)
    records = make_keyed_log(pop, config, seed=21)
    n_shared = int(pop.visits_both.sum())
    p_max = n_shared / 800
    with pytest.raises(ValidationError, match=f"{p_max:.6g}"):
        resample_scenario(records, min(p_max * 1.5, 0.99), seed=5, config=config)
    with pytest.raises(ValidationError, match="p_target=1.0"):
        resample_scenario(records, 1.0, seed=5, config=config)


def test_resample_requires_keys():
    _, _, config, log = small_log(n=50)
    records = site1_log_to_records(log)
    with pytest.raises(ValidationError, match="keys"):
        resample_scenario(records, 0.2, seed=1, config=config)


def test_resample_deterministic():
    spec, pop, config, _ = small_log(n=600, p=0.5)
    records = make_keyed_log(pop, config, seed=21)
    a = resample_scenario(records, 0.25, seed=9, config=config)
    b = resample_scenario(records, 0.25, seed=9, config=config)
    assert np.array_equal(a.outcomes, b.outcomes)
    assert np.array_equal(a.cluster_codes, b.cluster_codes)


def test_resample_estimate_tracks_truth():
    spec = SyntheticSpec.from_deltas(
        mu10=1.0, mu20=0.0, mu13=1.5, mu23=0.2, delta1=0.8, delta2=-0.8,
        p_overlap=0.6, n_users=8000, n_reps=1, seed=14,
    )
    pop = generate_population(spec)
    config = DesignConfig(alpha=0.75, cluster_salt=8)
    records = make_keyed_log(pop, config, seed=21)
    replayed = resample_scenario(records, 0.5, seed=2, config=config)
    est = corrected_te(summarize_cells(replayed), 0.75)
    # truth at the replayed overlap, not the historical one
    want = (1 - 0.5) * (1.0 - 0.0) + 0.5 * (1.5 - (0.2 - 0.8))
    assert abs(est.point - want) <= 4 * est.std_error
