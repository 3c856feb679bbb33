"""Spectra: eigenvalue samples, ESD distances, Stieltjes gaps, ladders."""

import json
import math

import numpy as np
import pytest

from test_mp import trapezoid_cdf_oracle

from covspectra.ensembles import (
    CovarianceModel,
    EnsembleConfig,
    EntryLaw,
    FilterSpec,
    IIDColumns,
    LinearProcessColumns,
    MDSColumns,
    sample_matrix,
)
from covspectra.errors import (
    DimensionMismatch,
    InvalidLadder,
    InvalidParameter,
    NotPSD,
)
from covspectra.linalg import UpperHalfPoint
from covspectra.mp import MPLaw
from covspectra.rng import stream
from covspectra.spectra import (
    SpectralSample,
    default_z_grid,
    eigenvalues_csv,
    esd_cdf,
    ks_distance,
    mp_convergence_experiment,
    sample_cov_spectrum,
    stieltjes_gap,
    universality_experiment,
)


def gaussian_config(p, n, seed=7):
    return EnsembleConfig(
        p=p,
        n=n,
        seed=seed,
        column_model=IIDColumns(
            law=EntryLaw.standard_normal(), covariance=CovarianceModel.identity()
        ),
    )


def rademacher_config(p, n, seed=7):
    return EnsembleConfig(
        p=p,
        n=n,
        seed=seed,
        column_model=IIDColumns(
            law=EntryLaw.rademacher(), covariance=CovarianceModel.identity()
        ),
    )


# ------------------------------------------------------------- spectrum

def test_spectrum_of_zero_matrix():
    s = sample_cov_spectrum(np.zeros((3, 5)))
    assert np.array_equal(s.eigs, np.zeros(3))


def test_spectrum_of_constant_row():
    s = sample_cov_spectrum(np.ones((1, 7)))
    assert s.eigs[0] == pytest.approx(1.0, abs=1e-14)


def test_spectrum_rank_one_column():
    s = sample_cov_spectrum(np.array([[1.0], [0.0]]))
    np.testing.assert_allclose(s.eigs, [0.0, 1.0], atol=1e-14)


def test_spectrum_rank_deficiency_zero_count():
    y = stream(0, 0).standard_normal((6, 3))
    s = sample_cov_spectrum(y)
    assert np.sum(np.abs(s.eigs) <= 1e-8) == 3
    assert np.all(s.eigs[3:] > 1e-8)


def test_spectrum_trace_identity():
    y = stream(1, 0).standard_normal((20, 30))
    s = sample_cov_spectrum(y)
    assert np.sum(s.eigs) == pytest.approx(np.sum(y * y) / 30.0, rel=1e-9)
    assert np.all(np.diff(s.eigs) >= 0.0)


def test_spectral_sample_validation():
    with pytest.raises(InvalidParameter):
        SpectralSample(eigs=np.array([2.0, 1.0]), p=2, n=4)
    with pytest.raises(NotPSD):
        SpectralSample(eigs=np.array([-0.5, 1.0]), p=2, n=4)
    with pytest.raises(InvalidParameter):
        SpectralSample(eigs=np.array([1.0, 2.0]), p=3, n=4)


# -------------------------------------------------------------- esd cdf

def test_esd_cdf_step_values():
    s = SpectralSample(eigs=np.array([1.0, 2.0, 3.0]), p=3, n=3)
    assert esd_cdf(s, 0.5) == 0.0
    assert esd_cdf(s, 2.0) == pytest.approx(2.0 / 3.0)
    assert esd_cdf(s, 2.0 - 1e-9) == pytest.approx(1.0 / 3.0)
    assert esd_cdf(s, 3.0) == 1.0
    assert esd_cdf(s, 10.0) == 1.0


def test_esd_cdf_mass_at_zero_for_tall_matrices():
    cfg = gaussian_config(80, 40)
    s = sample_cov_spectrum(sample_matrix(cfg).Y)
    assert esd_cdf(s, 1e-8) >= 1.0 - 1.0 / 2.0 - 1e-8


# ---------------------------------------------------------- ks distance

def test_ks_identical_samples_zero():
    s = SpectralSample(eigs=np.array([0.5, 1.5]), p=2, n=2)
    t = SpectralSample(eigs=np.array([0.5, 1.5]), p=2, n=2)
    assert ks_distance(s, t) == 0.0


def test_ks_disjoint_atoms():
    s = SpectralSample(eigs=np.array([0.0]), p=1, n=1)
    t = SpectralSample(eigs=np.array([1.0]), p=1, n=1)
    assert ks_distance(s, t) == 1.0


def test_ks_hand_case():
    s = SpectralSample(eigs=np.array([1.0, 2.0]), p=2, n=2)
    t = SpectralSample(eigs=np.array([1.0, 3.0]), p=2, n=2)
    assert ks_distance(s, t) == 0.5
    assert ks_distance(t, s) == 0.5


def test_ks_to_mp_against_quadrature_oracle():
    y = 0.5
    eigs = np.array([0.5, 1.0, 2.5])
    sample = SpectralSample(eigs=eigs, p=3, n=6)
    law = MPLaw.from_ratio(y)
    cands = []
    for i, lam in enumerate(eigs):
        f = trapezoid_cdf_oracle(y, lam)
        cands += [abs(f - (i + 1) / 3.0), abs(f - i / 3.0)]
    assert ks_distance(law, sample) == pytest.approx(max(cands), abs=1e-6)


def test_ks_to_mp_with_atom_and_ties():
    # All mass at zero against a law with a 3/4 atom there: distance is 1/4,
    # not the 3/4 a tie-blind jump scan would report.
    sample = SpectralSample(eigs=np.zeros(4), p=4, n=1)
    law = MPLaw.from_ratio(4.0)
    assert ks_distance(law, sample) == pytest.approx(0.25, abs=1e-9)


def test_ks_to_mp_of_mp_quantiles_is_small():
    law = MPLaw.from_ratio(0.5)
    qs = law.quantiles(500)
    sample = SpectralSample(eigs=qs, p=500, n=1000)
    assert ks_distance(law, sample) <= 2e-3


def test_ks_to_mp_moderate_rademacher():
    cfg = rademacher_config(200, 400, seed=1)
    s = sample_cov_spectrum(sample_matrix(cfg).Y)
    assert ks_distance(MPLaw.from_ratio(0.5), s) <= 0.08


# -------------------------------------------------------- stieltjes gap

def test_gap_identical_samples():
    s = SpectralSample(eigs=np.array([0.3, 1.7]), p=2, n=2)
    grid = (UpperHalfPoint(0.0, 1.0), UpperHalfPoint(1.0, 0.2))
    g = stieltjes_gap(s, s, grid)
    assert np.all(g.gap == 0.0)


def test_gap_hand_value():
    sy = SpectralSample(eigs=np.array([0.0, 2.0]), p=2, n=2)
    sz = SpectralSample(eigs=np.array([1.0, 1.0]), p=2, n=2)
    g = stieltjes_gap(sy, sz, (UpperHalfPoint(0.0, 1.0),))
    assert g.values_y[0] == pytest.approx(0.2 + 0.6j, abs=1e-15)
    assert g.values_z[0] == pytest.approx(0.5 + 0.5j, abs=1e-15)
    assert g.gap[0] == pytest.approx(0.31622776601683794, abs=1e-12)


def test_gap_far_tail_damping():
    rng = stream(2, 0)
    ey = np.sort(rng.uniform(0.0, 3.0, 50))
    ez = np.sort(rng.uniform(0.0, 3.0, 50))
    sy = SpectralSample(eigs=ey, p=50, n=100)
    sz = SpectralSample(eigs=ez, p=50, n=100)
    g = stieltjes_gap(sy, sz, (UpperHalfPoint(0.0, 1000.0),))
    assert g.gap[0] <= np.mean(np.abs(ey - ez)) / 1000.0**2 + 1e-15


def test_gap_transform_bound():
    rng = stream(3, 0)
    sy = SpectralSample(eigs=np.sort(rng.uniform(0, 5, 30)), p=30, n=60)
    sz = SpectralSample(eigs=np.sort(rng.uniform(0, 5, 30)), p=30, n=60)
    grid = default_z_grid(0.5)
    g = stieltjes_gap(sy, sz, grid)
    for pt, vy, vz in zip(g.points, g.values_y, g.values_z):
        assert abs(vy) <= 1.0 / pt.im + 1e-12
        assert abs(vz) <= 1.0 / pt.im + 1e-12


def test_gap_dimension_mismatch():
    sy = SpectralSample(eigs=np.array([1.0]), p=1, n=2)
    sz = SpectralSample(eigs=np.array([1.0, 2.0]), p=2, n=2)
    with pytest.raises(DimensionMismatch):
        stieltjes_gap(sy, sz, (UpperHalfPoint(0.0, 1.0),))


def test_default_z_grid_shape():
    grid = default_z_grid(0.5)
    assert len(grid) == 10
    b = (1.0 + math.sqrt(0.5)) ** 2
    assert UpperHalfPoint(0.0, 0.2) in grid
    assert UpperHalfPoint(b + 1.0, 1.0) in grid
    assert all(pt.im > 0 for pt in grid)


# ---------------------------------------------------------- experiments

def test_identity_filter_keeps_esd_bit_exact():
    base = rademacher_config(12, 24, seed=3)
    filtered = EnsembleConfig(
        p=12,
        n=24,
        seed=3,
        column_model=LinearProcessColumns(
            law=EntryLaw.rademacher(),
            covariance=CovarianceModel.identity(),
            filter_spec=FilterSpec.identity(),
        ),
    )
    a = sample_cov_spectrum(sample_matrix(base).Y)
    b = sample_cov_spectrum(sample_matrix(filtered).Y)
    assert np.array_equal(a.eigs, b.eigs)


def test_ladder_validation():
    cfg = rademacher_config(50, 100)
    with pytest.raises(InvalidLadder):
        universality_experiment(cfg, [(100, 200), (50, 100)], replicas=3)
    with pytest.raises(InvalidLadder):
        universality_experiment(cfg, [(50, 100), (100, 150)], replicas=3)
    with pytest.raises(InvalidLadder):
        universality_experiment(cfg, [], replicas=3)
    with pytest.raises(InvalidParameter):
        universality_experiment(cfg, [(50, 100), (100, 200)], replicas=2)


def test_universality_report_structure_and_determinism():
    cfg = gaussian_config(20, 40, seed=5)
    rep1 = universality_experiment(cfg, [(20, 40), (40, 80)], replicas=3)
    rep2 = universality_experiment(cfg, [(20, 40), (40, 80)], replicas=3)
    assert json.dumps(rep1.to_json()) == json.dumps(rep2.to_json())
    assert [r.p for r in rep1.rungs] == [20, 40]
    for rung in rep1.rungs:
        assert rung.replicas == 3
        assert len(rung.ks_values) == 3
        assert rung.se_gap >= 0.0
        assert 0.0 <= rung.mean_ks <= 1.0
    doc = rep1.to_json()
    assert doc["config_hash"] == cfg.config_hash()
    assert doc["seed"] == 5
    json.dumps(doc)


def test_universality_gap_shrinks_for_rademacher():
    cfg = rademacher_config(50, 100, seed=11)
    rep = universality_experiment(cfg, [(50, 100), (200, 400)], replicas=5)
    assert rep.gap_trend_ok
    assert rep.rungs[-1].mean_gap <= 0.06


def test_universality_runs_for_mds_and_filtered_models():
    mds = EnsembleConfig(
        p=30,
        n=60,
        seed=13,
        column_model=MDSColumns(law=EntryLaw.rademacher(), m=3),
    )
    rep = universality_experiment(mds, [(30, 60), (60, 120)], replicas=3)
    assert len(rep.rungs) == 2
    lp = EnsembleConfig(
        p=30,
        n=60,
        seed=13,
        column_model=LinearProcessColumns(
            law=EntryLaw.rademacher(),
            covariance=CovarianceModel.identity(),
            filter_spec=FilterSpec.moving_sum(2),
        ),
    )
    rep = universality_experiment(lp, [(30, 60), (60, 120)], replicas=3)
    assert all(r.mean_gap < 1.0 for r in rep.rungs)


def test_mp_convergence_report():
    cfg = gaussian_config(50, 100, seed=29)
    rep = mp_convergence_experiment(cfg, [(50, 100), (100, 200)], replicas=3)
    assert [r.p for r in rep.rungs] == [50, 100]
    assert rep.rungs[-1].mean_ks < rep.rungs[0].mean_ks
    doc = rep.to_json()
    assert doc["kind"] == "mp_convergence"
    assert doc["config_hash"] == cfg.config_hash()


# --------------------------------------------------------------- output

def test_eigenvalue_csv_round_trip():
    y = stream(9, 0).standard_normal((6, 10))
    s = sample_cov_spectrum(y)
    text = eigenvalues_csv(s)
    back = np.array([float(line) for line in text.strip().splitlines()])
    assert np.array_equal(back, s.eigs)
