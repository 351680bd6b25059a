import json

import numpy as np
import pytest

from cookieless_ab import (
    AllocationTable,
    Cluster,
    DesignConfig,
    Site1Log,
    Site1Treatment,
    Site2Exposure,
    SyntheticSpec,
    ValidationError,
    allocate_treatment,
    assign_macrocluster,
    cluster_hash,
    expose_population,
    generate_population,
    substream,
)
from cookieless_ab.core import EXPOSURE_INDEX
from cookieless_ab.randomization import assign_exposures, cluster_bits_for_uids

from conftest import FIXTURES


def reference_hash(key: bytes, salt: int) -> int:
    """Second, structurally different implementation of the documented hash."""
    mask = (1 << 64) - 1
    buf = (salt & mask).to_bytes(8, "little") + key
    h = 0xCBF29CE484222325
    for b in buf:
        h = ((h ^ b) * 0x100000001B3) & mask
    h ^= h >> 30
    h = (h * 0xBF58476D1CE4E5B9) & mask
    h ^= h >> 27
    h = (h * 0x94D049BB133111EB) & mask
    h ^= h >> 31
    return h


def test_frozen_hash_vectors():
    doc = json.loads((FIXTURES / "cluster_hash_vectors.json").read_text())
    assert len(doc["vectors"]) >= 30
    for vec in doc["vectors"]:
        key = bytes.fromhex(vec["key_hex"])
        got = cluster_hash(key, vec["salt"])
        assert f"{got:016x}" == vec["hash_hex"]
        assert assign_macrocluster(key, vec["salt"]).value == vec["cluster"]


def test_hash_agrees_with_independent_implementation():
    rng = np.random.default_rng(4711)
    for _ in range(300):
        key = bytes(rng.integers(0, 256, size=int(rng.integers(1, 40)), dtype=np.uint8))
        salt = int(rng.integers(0, 2**63))
        assert cluster_hash(key, salt) == reference_hash(key, salt)


def test_assign_macrocluster_str_and_bytes_agree():
    assert assign_macrocluster("user-42", 9) == assign_macrocluster(b"user-42", 9)
    with pytest.raises(ValidationError):
        assign_macrocluster(b"", 9)


def test_assignment_is_pure_across_instances():
    # Two sites compute independently from the same (key, salt) contract.
    keys = [f"visitor-{i}".encode() for i in range(500)]
    site_a = [assign_macrocluster(k, 77) for k in keys]
    site_b = [assign_macrocluster(bytes(k), 77) for k in keys]
    assert site_a == site_b


def test_vectorized_bits_match_scalar():
    rng = np.random.default_rng(99)
    uids = rng.integers(0, 2**63, size=1000, dtype=np.uint64)
    for salt in (0, 123456789, 2**63 + 17):
        bits = cluster_bits_for_uids(uids, salt)
        for uid, bit in zip(uids[:200], bits[:200]):
            want = assign_macrocluster(int(uid).to_bytes(8, "big"), salt)
            assert (want is Cluster.C2) == bool(bit)


def test_cluster_balance_over_100k_keys():
    uids = np.arange(100_000, dtype=np.uint64)
    share = float(np.mean(cluster_bits_for_uids(uids, salt=20260822)))
    assert 0.49 <= share <= 0.51


def test_salt_change_remaps_about_half():
    uids = np.arange(100_000, dtype=np.uint64)
    a = cluster_bits_for_uids(uids, salt=1)
    b = cluster_bits_for_uids(uids, salt=2)
    moved = float(np.mean(a != b))
    sigma = (0.25 / 100_000) ** 0.5
    assert abs(moved - 0.5) <= 3 * sigma + 0.002


def test_allocation_table_swap_sums_to_one():
    table = AllocationTable(site1_split=0.5, alpha=0.7)
    assert table.prob_site2_t3(Cluster.C1) == 0.7
    assert table.prob_site2_t3(Cluster.C1) + table.prob_site2_t3(Cluster.C2) == 1.0
    assert table.prob_site1_t1(Cluster.C1) == table.prob_site1_t1(Cluster.C2)


def test_allocation_table_rejects_boundary_without_test_mode():
    with pytest.raises(ValidationError):
        AllocationTable(site1_split=0.5, alpha=1.0)
    table = AllocationTable(site1_split=0.5, alpha=1.0, allow_degenerate=True)
    rng = substream(1, "deg")
    draws = {allocate_treatment(Cluster.C1, 2, table, rng) for _ in range(50)}
    assert draws == {Site2Exposure.T3}


def test_allocate_treatment_law_of_large_numbers():
    table = AllocationTable(site1_split=0.5, alpha=0.8)
    rng = substream(7, "alloc")
    n = 20_000
    t1 = sum(
        allocate_treatment(Cluster.C1, 1, table, rng) is Site1Treatment.T1
        for _ in range(n)
    )
    s3 = sum(
        allocate_treatment(Cluster.C2, 2, table, rng) is Site2Exposure.T3
        for _ in range(n)
    )
    assert abs(t1 / n - 0.5) <= 3 * (0.25 / n) ** 0.5
    assert abs(s3 / n - 0.2) <= 3 * (0.2 * 0.8 / n) ** 0.5
    with pytest.raises(ValidationError):
        allocate_treatment(Cluster.C1, 3, table, rng)


def test_substreams_reproducible_and_distinct():
    a1 = substream(42, "noise", 3).standard_normal(16)
    a2 = substream(42, "noise", 3).standard_normal(16)
    b = substream(42, "noise", 4).standard_normal(16)
    c = substream(43, "noise", 3).standard_normal(16)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    assert not np.array_equal(a1, c)
    # streams with different labels stay decorrelated
    x = substream(42, "u", 0).standard_normal(40_000)
    y = substream(42, "v", 0).standard_normal(40_000)
    assert abs(float(np.corrcoef(x, y)[0, 1])) < 0.02


def _population(n=30_000, p=0.5, seed=2, d=0):
    spec = SyntheticSpec.from_deltas(
        mu10=1.0, mu20=0.0, mu13=2.0, mu23=0.5, delta1=1.0, delta2=-1.5,
        p_overlap=p, n_users=n, n_reps=1, seed=seed,
        covariate_dim=d, covariate_coeffs=(1.0,) * d,
    )
    return spec, generate_population(spec, rep=0)


def test_expose_population_allocation_rates():
    spec, pop = _population()
    config = DesignConfig(alpha=0.75, cluster_salt=11)
    log = expose_population(pop, config, seed=5)
    n = log.n
    assert n == pop.n
    share_t1 = float(np.mean(log.treatment_codes == 0))
    assert abs(share_t1 - 0.5) <= 3 * (0.25 / n) ** 0.5


def test_expose_population_swaps_site2_allocation_between_clusters():
    spec, pop = _population(p=1.0)
    config = DesignConfig(alpha=0.75, cluster_salt=11)
    bits, treat, site2, _ = assign_exposures(pop, config, seed=5)
    for bit, want in ((0, 0.75), (1, 0.25)):
        mask = bits == bit
        share3 = float(np.mean(site2[mask] == 3))
        n = int(mask.sum())
        assert abs(share3 - want) <= 3 * (want * (1 - want) / n) ** 0.5


def test_expose_population_no_overlap_uses_site1_only_outcomes():
    spec, pop = _population(p=0.0, n=2_000)
    config = DesignConfig(alpha=0.75, cluster_salt=3)
    log = expose_population(pop, config, seed=9)
    for t, col in ((0, EXPOSURE_INDEX[(1, 0)]), (1, EXPOSURE_INDEX[(2, 0)])):
        mask = log.treatment_codes == t
        assert np.array_equal(log.outcomes[mask], pop.outcomes[mask, col])


def test_expose_population_degenerate_alpha_replays_exactly():
    spec, pop = _population(p=1.0, n=2_000)
    config = DesignConfig(alpha=1.0, cluster_salt=3, allow_degenerate=True)
    log = expose_population(pop, config, seed=9)
    mask = (log.cluster_codes == 0) & (log.treatment_codes == 0)
    col = EXPOSURE_INDEX[(1, 3)]
    assert np.array_equal(log.outcomes[mask], pop.outcomes[mask, col])


def test_expose_population_deterministic_and_salt_sensitive():
    spec, pop = _population(n=5_000)
    config = DesignConfig(alpha=0.75, cluster_salt=11)
    log1 = expose_population(pop, config, seed=5)
    log2 = expose_population(pop, config, seed=5)
    assert np.array_equal(log1.outcomes, log2.outcomes)
    assert np.array_equal(log1.cluster_codes, log2.cluster_codes)
    other = expose_population(pop, DesignConfig(alpha=0.75, cluster_salt=12), seed=5)
    assert not np.array_equal(log1.cluster_codes, other.cluster_codes)


def test_site1_log_schema_has_no_identity_columns():
    # The exported analysis log must never grow user keys or the site-2 arm.
    fields = {f.name for f in Site1Log.__dataclass_fields__.values()}
    assert fields == {
        "cluster_codes",
        "treatment_codes",
        "outcomes",
        "covariates",
        "outcome_bounds",
    }
