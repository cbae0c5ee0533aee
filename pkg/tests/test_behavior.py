import numpy as np
import pytest

from dkpc.behavior import (
    LtiSystem,
    Trajectory,
    assemble,
    hankel,
    is_persistently_exciting,
    random_stable_lti,
    trajectory_from_csv,
    trajectory_to_csv,
    verify_fundamental_lemma,
)
from dkpc.lifting import IdentityBank, build_bank


# -- hankel -------------------------------------------------------------------


def test_hankel_scalar_definition():
    h = hankel(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 2)
    assert np.array_equal(h, [[1, 2, 3, 4], [2, 3, 4, 5]])


def test_hankel_constant_sequence_rank_one():
    h = hankel(np.full(8, 3.0), 3)
    assert np.linalg.matrix_rank(h) == 1


def test_hankel_full_depth_single_column():
    seq = np.arange(6.0).reshape(3, 2)
    h = hankel(seq, 3)
    assert h.shape == (6, 1)
    assert np.array_equal(h[:, 0], seq.ravel())


def test_hankel_depth_exceeds_length():
    with pytest.raises(ValueError):
        hankel(np.zeros((3, 1)), 4)


def test_hankel_sample_major_rows():
    seq = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]])
    h = hankel(seq, 2)
    # column 0 stacks step 0 then step 1, channels adjacent
    assert np.array_equal(h[:, 0], [1, 10, 2, 20])


def test_hankel_shift_structure():
    rng = np.random.default_rng(0)
    seq = rng.normal(size=(20, 3))
    h = hankel(seq, 4)
    d = 3
    # column j+1 is column j shifted up one sample with a fresh last block
    for j in range(h.shape[1] - 1):
        assert np.array_equal(h[: -d, j + 1], h[d:, j])


# -- persistency of excitation -------------------------------------------------


def test_pe_random_inputs_accepted():
    rng = np.random.default_rng(1)
    u = rng.uniform(-1, 1, size=(300, 2))
    report = is_persistently_exciting(u, 10)
    assert report
    assert report.rank == report.required_rank == 20
    # independent rank check
    assert np.linalg.matrix_rank(hankel(u, 10)) == 20


def test_pe_full_scale_order(plant_dataset):
    # order n_basis + L on the production-size data layout
    report = is_persistently_exciting(plant_dataset.u[:, :], 15)
    assert report and report.rank == 150


def test_pe_constant_sequence_rejected():
    report = is_persistently_exciting(np.full((50, 1), 2.0), 2)
    assert not report
    assert report.rank == 1


def test_pe_zero_sequence_rejected():
    assert not is_persistently_exciting(np.zeros((50, 1)), 2)


def test_pe_short_data_reports_reason():
    report = is_persistently_exciting(np.random.default_rng(0).normal(size=(20, 3)), 10)
    assert not report
    assert "short" in report.reason


# -- LTI simulator and the fundamental lemma -----------------------------------


def test_lti_simulate_shapes(small_lti):
    traj = small_lti.simulate(np.zeros((5, 2)))
    assert traj.length == 5 and traj.n_y == 2


def test_fundamental_lemma_exact_data(small_lti):
    residual = verify_fundamental_lemma(small_lti, t_len=200, depth=10, seed=0)
    assert residual <= 1e-8


def test_fundamental_lemma_many_systems():
    rng = np.random.default_rng(42)
    for k in range(5):
        sys = random_stable_lti(rng, int(rng.integers(3, 6)), 2, 2)
        assert verify_fundamental_lemma(sys, 200, 10, seed=k) <= 1e-8


def test_fundamental_lemma_foreign_trajectory_rejected(small_lti):
    rng = np.random.default_rng(7)
    other = random_stable_lti(rng, 4, 2, 2)
    query = other.simulate(rng.uniform(-1, 1, size=(10, 2)), x0=rng.standard_normal(4))
    residual = verify_fundamental_lemma(small_lti, 200, 10, seed=0, query=query)
    assert residual > 1e-6


def test_fundamental_lemma_zero_trajectory(small_lti):
    query = Trajectory(u=np.zeros((10, 2)), y=np.zeros((10, 2)))
    residual = verify_fundamental_lemma(small_lti, 200, 10, seed=0, query=query)
    assert residual <= 1e-12


def test_fundamental_lemma_rejects_rank_deficient_data():
    sys = LtiSystem(a=[[0.5]], b=[[1.0]], c=[[1.0]])
    with pytest.raises(ValueError, match="persistently exciting"):
        # depth + states larger than the data can support
        verify_fundamental_lemma(sys, t_len=12, depth=10, seed=0)


# -- assemble -------------------------------------------------------------------


def test_assemble_shapes(plant_dataset):
    bank = build_bank(plant_dataset.y, 40, seed=2)
    hs = assemble(plant_dataset, bank, t_ini=5, horizon=10, pe_check=False)
    t_len = plant_dataset.length
    assert hs.n_cols == t_len - 15 + 1
    assert hs.z.shape == (40 * 15, hs.n_cols)
    assert hs.u.shape == (10 * 15, hs.n_cols)
    assert hs.y.shape == (10 * 15, hs.n_cols)


def test_assemble_full_scale_arithmetic():
    # shape rule:  T = 1000, T_ini = 5, N = 10 -> 986 columns
    rng = np.random.default_rng(0)
    data = Trajectory(u=rng.normal(size=(1000, 10)), y=rng.normal(size=(1000, 10)))
    bank = build_bank(data.y, 40, seed=0)
    hs = assemble(data, bank, 5, 10, pe_check=False)
    assert hs.n_cols == 986
    assert hs.z.shape == (600, 986)
    assert hs.u.shape == (150, 986)


def test_assemble_partition_consistency(lti_dataset):
    bank = IdentityBank(2)
    hs = assemble(lti_dataset, bank, t_ini=4, horizon=8, pe_check=False)
    assert np.array_equal(np.vstack([hs.u_past, hs.u_future]), hs.u)
    assert np.array_equal(np.vstack([hs.y_past, hs.y_future]), hs.y)
    assert np.array_equal(np.vstack([hs.z_past, hs.z_future]), hs.z)
    assert hs.u_past.shape == (8, hs.n_cols)
    assert hs.u_future.shape == (16, hs.n_cols)


def test_assemble_single_column():
    data = Trajectory(u=np.arange(6.0).reshape(3, 2), y=np.arange(6.0).reshape(3, 2))
    hs = assemble(data, IdentityBank(2), t_ini=1, horizon=2, pe_check=False)
    assert hs.n_cols == 1


def test_assemble_insufficient_data():
    data = Trajectory(u=np.zeros((4, 1)), y=np.zeros((4, 1)))
    with pytest.raises(ValueError):
        assemble(data, IdentityBank(1), t_ini=3, horizon=3, pe_check=False)


def test_assemble_warns_on_pe_failure():
    data = Trajectory(u=np.zeros((50, 1)), y=np.zeros((50, 1)))
    with pytest.warns(UserWarning, match="persistently exciting"):
        hs = assemble(data, IdentityBank(1), t_ini=2, horizon=3)
    assert hs.pe_report is not None and not hs.pe_report


def test_assemble_stores_pe_report(lti_dataset):
    hs = assemble(lti_dataset, IdentityBank(2), t_ini=4, horizon=8)
    assert hs.pe_report is not None and hs.pe_report.is_pe


# -- trajectory container and CSV ----------------------------------------------


def test_trajectory_validates_lengths():
    with pytest.raises(ValueError):
        Trajectory(u=np.zeros((3, 1)), y=np.zeros((4, 1)))


def test_trajectory_csv_round_trip(tmp_path, lti_dataset):
    path = tmp_path / "traj.csv"
    trajectory_to_csv(lti_dataset, path, comment="config_hash=deadbeef")
    back = trajectory_from_csv(path)
    assert np.array_equal(back.u, lti_dataset.u)
    assert np.array_equal(back.y, lti_dataset.y)
    assert back.dt == lti_dataset.dt
    assert path.read_text().startswith("# config_hash=deadbeef")
