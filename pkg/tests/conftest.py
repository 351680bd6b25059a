import numpy as np
import pytest

from cookieless_ab import (
    CellQuartet,
    CellSummary,
    Cluster,
    Site1Log,
    Site1Treatment,
)

FIXTURES = __import__("pathlib").Path(__file__).resolve().parent.parent / "fixtures"


def make_quartet(
    means,
    ns=(100, 100, 100, 100),
    variances=(1.0, 1.0, 1.0, 1.0),
    bounds=None,
):
    """Quartet in (C1T1, C1T2, C2T1, C2T2) order from raw numbers."""
    labels = [
        (Cluster.C1, Site1Treatment.T1),
        (Cluster.C1, Site1Treatment.T2),
        (Cluster.C2, Site1Treatment.T1),
        (Cluster.C2, Site1Treatment.T2),
    ]
    cells = [
        CellSummary(
            cluster=c,
            treatment=t,
            n=int(n),
            mean=float(m),
            sample_variance=float(v),
            outcome_bounds=bounds,
        )
        for (c, t), n, m, v in zip(labels, ns, means, variances)
    ]
    return CellQuartet(c1_t1=cells[0], c1_t2=cells[1], c2_t1=cells[2], c2_t2=cells[3])


def random_log(rng, n_per_cell=40, d=0, spread=1.0, shift=0.0):
    """Site-1 log with all four cells populated from one RNG."""
    clusters, treats, ys, xs = [], [], [], []
    for c in (0, 1):
        for t in (0, 1):
            m = int(rng.integers(n_per_cell // 2, n_per_cell * 2))
            clusters.append(np.full(m, c, dtype=np.uint8))
            treats.append(np.full(m, t, dtype=np.uint8))
            ys.append(shift + spread * rng.standard_normal(m) + rng.normal())
            xs.append(rng.standard_normal((m, d)))
    return Site1Log(
        cluster_codes=np.concatenate(clusters),
        treatment_codes=np.concatenate(treats),
        outcomes=np.concatenate(ys),
        covariates=np.vstack(xs),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
