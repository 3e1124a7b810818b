"""Top-level acceptance checks.

Each test prints one ACCEPTANCE line with its wall-clock time and enforces a
runtime budget. Oracles are implemented here, independent of the library
internals they check: a stacked least-squares fit for amplitudes, a proximal
gradient solver for the penalized objective, a per-site triple loop for the
pattern descriptor, and direct eigen-identities for the interpolation basis.
"""

import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from modesift import analysis, cli, dmd, dmdsp, features, sampling, synth, tim
from modesift.dmdsp import AdmmParams
from modesift.errors import SequenceTooShortError
from modesift.evaluation import (
    CorpusManifest,
    ManifestEntry,
    make_folds,
    run_experiment,
    score,
)
from modesift.features import LbptopConfig
from modesift.sampling import SamplingConfig
from modesift.seqio import FrameSequence, SnapshotPair

from conftest import planted_system, random_snapshots


@contextmanager
def _criterion(number, name, budget_s):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if elapsed >= budget_s:
            raise AssertionError(
                f"criterion {number} took {elapsed:.1f}s, budget {budget_s:.0f}s"
            )
    except BaseException:
        print(f"ACCEPTANCE {number:02d} ({name}): FAIL [{time.perf_counter() - start:.1f}s]")
        raise
    print(f"ACCEPTANCE {number:02d} ({name}): PASS [{elapsed:.1f}s]")


def test_criterion_01_decomposition_exactness():
    with _criterion(1, "decomposition exactness", 1.0):
        data, mu_true, snap = planted_system(m=200, n=20)
        d = dmd.decompose(snap)
        assert d.rank == 3
        got = np.sort_complex(d.eigenvalues)
        want = np.sort_complex(mu_true)
        assert np.abs(got - want).max() <= 1e-8
        recon = dmd.reconstruct(d, np.ones(d.rank, dtype=bool), data.shape[1])
        rel = np.linalg.norm(recon - data) / np.linalg.norm(data)
        assert rel <= 1e-8


def test_criterion_02_amplitude_optimality():
    with _criterion(2, "amplitude optimality", 5.0):
        for seed in range(20):
            snap = random_snapshots(40, 5, seed=seed)
            d = dmd.decompose(snap)
            assert d.rank == 5
            m, n = snap.psi0.shape
            design = np.empty((m * n, d.rank), dtype=complex)
            for i in range(d.rank):
                evolution = d.eigenvalues[i] ** np.arange(n)
                design[:, i] = np.kron(evolution, d.modes[:, i])
            target = snap.psi0.T.reshape(-1).astype(complex)
            alpha_ls, *_ = np.linalg.lstsq(design, target, rcond=None)
            rel = np.linalg.norm(alpha_ls - d.amplitudes) / np.linalg.norm(alpha_ls)
            assert rel <= 1e-10, f"seed {seed}: relative error {rel:.3e}"


def test_criterion_03_sparsity_path_properties():
    with _criterion(3, "sparsity path properties", 60.0):
        _, _, snap = planted_system(m=200, n=20, noise=1e-3)
        d = dmd.decompose(snap)

        res = dmdsp.admm_solve(d, 1e-8)
        rel = np.linalg.norm(res.alpha - d.amplitudes) / np.linalg.norm(d.amplitudes)
        assert rel <= 1e-6, f"vanishing penalty drifted {rel:.3e} from the optimum"

        records = dmdsp.gamma_sweep(d, snap)  # default 400-point grid
        assert len(records) == 400
        nnz = np.array([rec.nnz for rec in records])
        assert np.all(np.diff(nnz) <= 0), "mode count increased along the penalty path"

        for rec in records:
            assert np.all(rec.alpha_polished[rec.structure] == 0.0)
            thresholded = rec.alpha_admm.copy()
            thresholded[rec.structure] = 0.0
            assert rec.loss <= dmd.loss(d, snap, thresholded) + 1e-10


def _soft_shrink(a, kappa):
    mag = np.abs(a)
    out = np.zeros_like(a)
    keep = mag > kappa
    out[keep] = a[keep] * (1.0 - kappa / mag[keep])
    return out


def _proximal_gradient(p, q, gamma, max_iter=50000, tol=1e-9):
    """Accelerated proximal gradient on alpha* P alpha - 2 Re(q* alpha) + gamma |alpha|_1."""
    lip = 2.0 * float(np.linalg.eigvalsh(p).max())
    step = 1.0 / lip

    def objective(a):
        quad = float(np.real(np.vdot(a, p @ a))) - 2.0 * float(np.real(np.vdot(q, a)))
        return quad + gamma * float(np.abs(a).sum())

    alpha = np.zeros(len(q), dtype=complex)
    momentum = alpha.copy()
    theta = 1.0
    best = alpha.copy()
    best_f = objective(alpha)
    f_prev = best_f
    for _ in range(max_iter):
        grad = 2.0 * (p @ momentum - q)
        alpha_new = _soft_shrink(momentum - step * grad, step * gamma)
        theta_new = (1.0 + np.sqrt(1.0 + 4.0 * theta * theta)) / 2.0
        momentum = alpha_new + ((theta - 1.0) / theta_new) * (alpha_new - alpha)
        alpha, theta = alpha_new, theta_new
        f = objective(alpha)
        if f < best_f:
            best_f, best = f, alpha.copy()
        if abs(f_prev - f) <= tol * max(1.0, abs(f)):
            break
        f_prev = f
    return best


def test_criterion_04_admm_objective_vs_independent_solver():
    with _criterion(4, "penalized objective vs independent solver", 10.0):
        tight = AdmmParams(max_iter=100000, eps_abs=1e-10, eps_rel=1e-10)
        for seed in range(10):
            snap = random_snapshots(30, 3, seed=100 + seed)
            d = dmd.decompose(snap)
            assert d.rank == 3
            p, q = dmd.quadratic_terms(d)
            for gamma in (10.0, 100.0, 1000.0):
                alpha_admm = dmdsp.admm_solve(d, gamma, tight).alpha
                alpha_ref = _proximal_gradient(p, q, gamma)
                f_admm = dmd.loss(d, snap, alpha_admm) + gamma * np.abs(alpha_admm).sum()
                f_ref = dmd.loss(d, snap, alpha_ref) + gamma * np.abs(alpha_ref).sum()
                assert abs(f_admm - f_ref) <= 1e-6, (
                    f"seed {seed}, gamma {gamma}: objectives "
                    f"{f_admm:.9f} vs {f_ref:.9f}"
                )


def _two_quadrature_snapshots(freq_hz, fps, m=300, n_cols=41, noise=1e-4, seed=0):
    rng = np.random.default_rng(seed)
    u1 = rng.normal(size=m)
    u2 = rng.normal(size=m)
    k = np.arange(n_cols)
    data = np.outer(u1, np.sin(2 * np.pi * freq_hz * k / fps)) + np.outer(
        u2, np.cos(2 * np.pi * freq_hz * k / fps)
    )
    data = data + noise * rng.normal(size=data.shape)
    return SnapshotPair(psi0=data[:, :-1], psi1=data[:, 1:], fps=fps)


def test_criterion_05_spectral_identification():
    with _criterion(5, "spectral identification", 5.0):
        snap = _two_quadrature_snapshots(15.0, fps=200.0)
        d = dmd.decompose(snap)
        freq, _ = analysis.mode_frequencies(d)
        assert freq.max() <= 100.0 + 1e-9  # nothing above the half rate

        hist = analysis.spectral_histogram([d], bin_width=1.0)
        assert hist.bin_edges[-1] == pytest.approx(100.0)
        assert int(np.argmax(hist.energy)) == 15
        window = hist.energy[14] + hist.energy[15]  # frequencies in [14, 16)
        assert window >= 0.9 * hist.energy.sum()

        # a 100 fps corpus is capped at 50 Hz
        decomps = [
            dmd.decompose(_two_quadrature_snapshots(10.0, fps=100.0, seed=1)),
            dmd.decompose(_two_quadrature_snapshots(22.0, fps=100.0, seed=2)),
        ]
        hist100 = analysis.spectral_histogram(decomps, bin_width=1.0)
        assert hist100.bin_edges[-1] == pytest.approx(50.0)
        for dec in decomps:
            f, _ = analysis.mode_frequencies(dec)
            assert f.max() <= 50.0 + 1e-9


def test_criterion_06_interpolation_basis():
    with _criterion(6, "interpolation basis", 5.0):
        ts = np.linspace(0.05, 1.0, 40)
        assert np.abs(tim.curve(9, 0, ts) - 1.0).max() <= 1e-12
        assert abs(tim.curve(4, 1, 0.25) - np.sin(5 * np.pi / 8)) <= 1e-12

        rng = np.random.default_rng(12)
        seq = FrameSequence(frames=rng.uniform(0, 1, size=(14, 6, 5)), fps=70.0)
        model = tim.fit(seq)
        back = tim.synthesize(model, 14)
        assert np.abs(back.frames - seq.frames).max() <= 1e-6

        assert tim.grid_positions(32, 5).tolist() == [1, 8, 16, 24, 32]

        for n in range(2, 17):
            lap = 2.0 * np.eye(n)
            lap[0, 0] = lap[-1, -1] = 1.0
            lap -= np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
            design = tim.curve_matrix(n, np.arange(1, n + 1) / n)
            for col in range(1, n):
                vec = design[:, col - 1]
                lam = 4.0 * np.sin(np.pi * col / (2.0 * n)) ** 2
                assert np.linalg.norm(lap @ vec - lam * vec) <= 1e-10


def _count_transitions(code):
    bits = [(code >> i) & 1 for i in range(4)]
    return sum(bits[i] != bits[(i + 1) % 4] for i in range(4))


def _reference_descriptor(frames, blocks, radii):
    rx, ry, rt = radii
    uniform = [c for c in range(16) if _count_transitions(c) <= 2]
    table = {c: (uniform.index(c) if c in uniform else len(uniform)) for c in range(16)}
    n_f, n_r, n_c = frames.shape
    rows = [(i * n_r) // blocks for i in range(blocks + 1)]
    cols = [(i * n_c) // blocks for i in range(blocks + 1)]
    feat = np.zeros((blocks * blocks, 3, 15))
    cell = 0
    for bi in range(blocks):
        for bj in range(blocks):
            vol = frames[:, rows[bi] : rows[bi + 1], cols[bj] : cols[bj + 1]]
            nt, ny, nx = vol.shape
            if ny >= 2 * ry + 1 and nx >= 2 * rx + 1:
                for t in range(nt):
                    for y in range(ry, ny - ry):
                        for x in range(rx, nx - rx):
                            c = vol[t, y, x]
                            code = (
                                (vol[t, y, x + rx] >= c)
                                + 2 * (vol[t, y - ry, x] >= c)
                                + 4 * (vol[t, y, x - rx] >= c)
                                + 8 * (vol[t, y + ry, x] >= c)
                            )
                            feat[cell, 0, table[int(code)]] += 1
            if nt >= 2 * rt + 1 and nx >= 2 * rx + 1:
                for t in range(rt, nt - rt):
                    for y in range(ny):
                        for x in range(rx, nx - rx):
                            c = vol[t, y, x]
                            code = (
                                (vol[t, y, x + rx] >= c)
                                + 2 * (vol[t - rt, y, x] >= c)
                                + 4 * (vol[t, y, x - rx] >= c)
                                + 8 * (vol[t + rt, y, x] >= c)
                            )
                            feat[cell, 1, table[int(code)]] += 1
            if nt >= 2 * rt + 1 and ny >= 2 * ry + 1:
                for t in range(rt, nt - rt):
                    for y in range(ry, ny - ry):
                        for x in range(nx):
                            c = vol[t, y, x]
                            code = (
                                (vol[t, y + ry, x] >= c)
                                + 2 * (vol[t - rt, y, x] >= c)
                                + 4 * (vol[t, y - ry, x] >= c)
                                + 8 * (vol[t + rt, y, x] >= c)
                            )
                            feat[cell, 2, table[int(code)]] += 1
            cell += 1
    return feat.reshape(-1)


def test_criterion_07_descriptor():
    with _criterion(7, "pattern descriptor", 5.0):
        assert LbptopConfig(blocks=5).dimension == 1125
        assert LbptopConfig(blocks=8).dimension == 2880

        table = features.uniform_pattern_table(4)
        uniform = [c for c in range(16) if _count_transitions(c) <= 2]
        assert len(uniform) == 14
        assert table.max() == 14  # 14 uniform bins plus one catch-all = 15
        assert table[uniform].tolist() == list(range(14))
        for code in (5, 10):
            assert table[code] == 14

        t, y, x = np.meshgrid(
            np.arange(7), np.arange(30), np.arange(30), indexing="ij"
        )
        frames = ((x + 2 * y + 3 * t) % 7) / 6.0
        seq = FrameSequence(frames=frames, fps=100.0)
        got = features.lbptop(seq, LbptopConfig(blocks=5, radii=(1, 1, 3)))
        want = _reference_descriptor(frames, 5, (1, 1, 3))
        assert np.array_equal(got, want)

        short = FrameSequence(frames=np.zeros((6, 30, 30)), fps=100.0)
        with pytest.raises(SequenceTooShortError):
            features.lbptop(short, LbptopConfig(radii=(1, 1, 3)))


def test_criterion_08_metrics_and_folds():
    with _criterion(8, "metrics and folds", 5.0):
        # one class with tp=3, fp=1, fn=2
        true = ["x", "x", "x", "x", "x", "y"]
        pred = ["x", "x", "x", "y", "y", "x"]
        rep = score(true, pred, ("x", "y"))
        m = dict(rep.per_class)["x"]
        assert (m.tp, m.fp, m.fn) == (3, 1, 2)
        assert m.recall == pytest.approx(0.6)
        assert m.precision == pytest.approx(0.75)
        assert m.f1 == pytest.approx(0.667, abs=5e-4)

        entries = []
        for s in range(26):
            for c in range(2):
                entries.append(
                    ManifestEntry(f"s{s:02d}_c{c}", f"s{s:02d}", "a", "p.msq")
                )
        folds = make_folds(CorpusManifest(entries=tuple(entries)), "loso")
        assert len(folds) == 26

        rng = np.random.default_rng(0)
        for _ in range(100):
            n_subj = int(rng.integers(2, 11))
            entries = []
            count = 0
            for s in range(n_subj):
                for _c in range(int(rng.integers(1, 6))):
                    entries.append(
                        ManifestEntry(
                            f"id{count}", f"subj{s}", str(rng.integers(0, 3)), "p"
                        )
                    )
                    count += 1
            manifest = CorpusManifest(entries=tuple(entries))
            subject_of = {e.sample_id: e.subject_id for e in manifest.entries}
            folds = make_folds(manifest, "loso")
            all_ids = {e.sample_id for e in manifest.entries}
            tested = []
            for fold in folds:
                tested.extend(fold.test_ids)
                assert set(fold.train_ids) | set(fold.test_ids) == all_ids
                assert not set(fold.train_ids) & set(fold.test_ids)
                # subject purity: held-out subject never leaks into training
                assert {subject_of[i] for i in fold.test_ids} == {fold.name}
                assert fold.name not in {subject_of[i] for i in fold.train_ids}
            assert sorted(tested) == sorted(all_ids)


@pytest.fixture(scope="session")
def synthetic_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    manifest = synth.generate_corpus(root, synth.CorpusSpec())
    return manifest


def test_criterion_09_directional_comparison(synthetic_corpus):
    with _criterion(9, "directional strategy comparison", 600.0):
        manifest = synthetic_corpus
        assert len(manifest) == 60
        assert len(manifest.subjects) == 6
        lbp = LbptopConfig(blocks=4, radii=(1, 1, 3), normalize=True)
        common = dict(lbptop_cfg=lbp, protocol="loso", seed=123)

        ss_cfg = SamplingConfig(
            strategy="ss", percent=45.0, gamma_min=0.02, gamma_max=3.0, gamma_count=80
        )
        us_cfg = SamplingConfig(strategy="us", percent=45.0)
        bl_cfg = SamplingConfig(strategy="bl")

        rep_ss = run_experiment(manifest, ss_cfg, **common)
        rep_us = run_experiment(manifest, us_cfg, **common)
        rep_bl = run_experiment(manifest, bl_cfg, **common)
        for name, rep in (("ss", rep_ss), ("us", rep_us), ("bl", rep_bl)):
            assert rep.failures == (), f"{name}: {rep.failures[:3]}"

        f1_ss = rep_ss.pooled.macro_f1
        f1_us = rep_us.pooled.macro_f1
        f1_bl = rep_bl.pooled.macro_f1
        print(
            f"  macro-F1 at 45%: ss={f1_ss:.4f} us={f1_us:.4f} bl={f1_bl:.4f}"
        )
        assert f1_ss >= f1_us, f"ss {f1_ss:.4f} < us {f1_us:.4f}"
        assert f1_ss >= f1_bl, f"ss {f1_ss:.4f} < bl {f1_bl:.4f}"


def test_criterion_10_determinism_across_threads(synthetic_corpus, tmp_path, monkeypatch):
    with _criterion(10, "thread-count determinism", 120.0):
        monkeypatch.delenv("MODESIFT_THREADS", raising=False)
        # the corpus manifest sits next to its clips
        manifest_path = str(Path(synthetic_corpus.entries[0].path).parent / "manifest.csv")
        args = [
            "evaluate", "--manifest", manifest_path, "--protocol", "loso",
            "--strategy", "ra", "--percent", "60", "--seed", "11",
            "--blocks", "2", "--normalize",
        ]
        out1 = tmp_path / "threads1"
        out4 = tmp_path / "threads4"
        assert cli.main(args + ["--output", str(out1), "--threads", "1"]) == 0
        assert cli.main(args + ["--output", str(out4), "--threads", "4"]) == 0
        for name in ("report.json", "report.md", "predictions.csv"):
            assert (out1 / name).read_bytes() == (out4 / name).read_bytes(), name
