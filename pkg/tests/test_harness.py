"""Configuration, sweeps, CSV outputs, model persistence and the CLI."""

import math
import subprocess
import sys

import numpy as np
import pytest

from metakbest.detect import KSchedule, expected_children
from metakbest.errors import BudgetExceeded, ConfigInvalid, ModelMissing
from metakbest.harness import config
from metakbest.harness.cli import main
from metakbest.harness.report import asymptotic_order, report_complexity
from metakbest.harness.sweep import (
    BER_HEADER, BerRecord, ber_csv_text, build_plan, read_ber_csv, run_sweep, snr_at_ber, wilson_interval,
    write_ber_csv,
)
from metakbest.harness.training import (
    CoefficientBank, load_bank, load_selectors, oracle_targets, save_bank, save_selectors,
    schedule_from_widths, train_bank,
)
from metakbest.modem import qam
from metakbest.neuralsel import SelectorHyper, TrainingConfig, train

SMALL = """
[experiment]
schema = 1
nt = 2
nr = 2
order = 4
snr_db = 4, 8, 12
detectors = ml, adaptive, mmse, zf, kbest-2
min_errors = 50
max_frames = 2000
seed = 7
oracle_samples = 100
val_samples = 50
fit_steps = 200
meta_tasks = 16
meta_steps = 5
unroll = 10
"""


def small_cfg(tmp_path, **kw):
    return config.parse(SMALL, out=str(tmp_path), **kw)


class TestConfig:
    def test_parse(self, tmp_path):
        cfg = small_cfg(tmp_path)
        assert (cfg.nt, cfg.nr, cfg.order) == (2, 2, 4)
        assert cfg.snr_db == (4.0, 8.0, 12.0)
        assert cfg.detectors == ("ml", "adaptive", "mmse", "zf", "kbest-2")
        assert cfg.training_snrs == cfg.snr_db

    def test_dumps_roundtrip(self, tmp_path):
        cfg = small_cfg(tmp_path, train_snr_db=(6.0,))
        assert config.parse(config.dumps(cfg)) == cfg

    def test_overrides(self, tmp_path):
        cfg = small_cfg(tmp_path, seed=99, workers=None)
        assert cfg.seed == 99 and cfg.workers == 1

    def test_resolve(self, tmp_path):
        cfg = small_cfg(tmp_path)
        assert cfg.resolve("a.model") == tmp_path / "a.model"
        assert cfg.resolve("/abs/a.model").as_posix() == "/abs/a.model"

    @pytest.mark.parametrize("edit", [
        ("schema = 1", "schema = 2"),
        ("schema = 1\n", ""),
        ("[experiment]", "[other]"),
        ("seed = 7", "seed = 7\nbogus = 1"),
        ("seed = 7", "seed = -1"),
        ("nt = 2", "nt = 3"),
        ("order = 4", "order = 8"),
        ("order = 4", "order = 256"),
        ("snr_db = 4, 8, 12", "snr_db = 4, x"),
        ("snr_db = 4, 8, 12", "snr_db ="),
        ("kbest-2", "kbest-0"),
        ("kbest-2", "fancy"),
        ("kbest-2", "zf"),
        ("min_errors = 50", "min_errors = 0"),
    ])
    def test_invalid(self, edit):
        with pytest.raises(ConfigInvalid):
            config.parse(SMALL.replace(*edit))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            config.load(tmp_path / "absent.ini")


class TestStatistics:
    def test_wilson_known_values(self):
        lo, hi = wilson_interval(0, 10)
        assert lo == 0.0 and hi == pytest.approx(0.27753, abs=1e-5)
        lo, hi = wilson_interval(5, 10)
        assert (lo, hi) == pytest.approx((0.23659, 0.76341), abs=1e-5)

    def test_wilson_contains_estimate(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 10**6))
            k = int(rng.integers(0, n + 1))
            lo, hi = wilson_interval(k, n)
            assert 0 <= lo <= k / n <= hi <= 1

    def test_wilson_empty(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_record_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            BerRecord("zf", 0.0, 10, 11, 0, 0, 0)

    def _curve(self, pts, name="x"):
        return [BerRecord(name, s, 10**6, int(round(b * 10**6)), 0, 0, 0) for s, b in pts]

    def test_snr_at_ber_interpolates_in_log(self):
        recs = self._curve([(10, 1e-2), (12, 1e-4)])
        assert snr_at_ber(recs, "x", 1e-3) == pytest.approx(11.0)
        assert snr_at_ber(recs, "x", 1e-2) == pytest.approx(10.0)

    def test_snr_at_ber_unordered_and_first_crossing(self):
        recs = self._curve([(14, 1e-5), (10, 1e-2), (12, 1e-4)])
        assert snr_at_ber(recs, "x", 1e-3) == pytest.approx(11.0)

    def test_snr_at_ber_no_crossing(self):
        recs = self._curve([(10, 1e-2), (12, 5e-3)])
        assert math.isnan(snr_at_ber(recs, "x", 1e-3))
        assert math.isnan(snr_at_ber(self._curve([(10, 1e-2), (12, 0.0)]), "x", 1e-3))
        assert math.isnan(snr_at_ber(recs, "other", 1e-3))


class TestSweep:
    def test_ml_noiseless_2x2(self, tmp_path):
        cfg = config.ExperimentConfig(nt=2, nr=2, order=4, snr_db=(60.0,), detectors=("ml", "zf"),
                                      max_frames=300, out=str(tmp_path))
        recs = run_sweep(cfg)
        ml = recs[0]
        assert ml.errors == 0 and ml.bits == 300 * 4
        assert ml.nodes_mean == 16 and ml.metric_evals_mean == 16
        assert report_complexity(recs, 2, 4)[0].check == "ok"
        assert recs[1].errors == 0

    def test_early_stop_exact(self, tmp_path):
        cfg = config.ExperimentConfig(nt=2, nr=2, order=4, snr_db=(0.0,), detectors=("zf",),
                                      min_errors=37, chunk=16, out=str(tmp_path))
        rec = run_sweep(cfg)[0]
        assert 37 <= rec.errors <= 37 + 4  # stops at the frame that crosses the threshold
        assert rec.bits < 16 * 4 * 10

    def test_chunk_and_workers_do_not_change_results(self, tmp_path):
        base = small_cfg(tmp_path, detectors=("ml", "mmse", "kbest-2", "schedule-2-3"))
        a = ber_csv_text(run_sweep(base))
        b = ber_csv_text(run_sweep(base.replace(chunk=7)))
        c = ber_csv_text(run_sweep(base.replace(workers=2, chunk=64)))
        assert a == b == c

    def test_budget(self, tmp_path):
        cfg = config.ExperimentConfig(nt=6, nr=6, order=16, detectors=("ml",), out=str(tmp_path))
        with pytest.raises(BudgetExceeded):
            build_plan(cfg)

    def test_missing_models(self, tmp_path):
        with pytest.raises(ModelMissing):
            build_plan(small_cfg(tmp_path))
        with pytest.raises(ModelMissing):
            build_plan(small_cfg(tmp_path, detectors=("neural",)), bank=object())

    def test_csv_roundtrip(self, tmp_path):
        recs = [BerRecord("ml", 10.0, 100, 3, 16.0, 16.0, 15.0), BerRecord("zf", 0.1, 7, 7, 0.0, 8.0, 6.25)]
        path = write_ber_csv(recs, tmp_path / "x" / "ber.csv")
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#") and lines[1].split(",") == BER_HEADER
        assert read_ber_csv(path) == recs

    def test_read_rejects_garbage(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            read_ber_csv(tmp_path / "none.csv")
        (tmp_path / "bad.csv").write_text("a,b\n")
        with pytest.raises(ConfigInvalid):
            read_ber_csv(tmp_path / "bad.csv")


class TestSchedules:
    def test_named(self):
        assert schedule_from_widths("kbest-8", 3, 4).widths == (4, 8, 8)
        assert schedule_from_widths("schedule-3-5-1", 3, 4).widths == (3, 5, 1)

    @pytest.mark.parametrize("name", ["schedule-5-1-1", "schedule-2-2", "schedule-2-9-1"])
    def test_invalid(self, name):
        with pytest.raises(ConfigInvalid):
            schedule_from_widths(name, 3, 4)

    def test_asymptotic_labels(self):
        assert asymptotic_order("ml") == "O(Q^Nt)"
        assert asymptotic_order("adaptive") == "O(K*Nt^3)"
        assert asymptotic_order("kbest-4") == "O(K*2^Nt)"
        assert asymptotic_order("mmse") == "O(Nt^3)"


class TestModels:
    def test_bank_roundtrip_and_determinism(self, tmp_path):
        cfg = small_cfg(tmp_path)
        points = oracle_targets(cfg)
        bank = train_bank(cfg, points)
        save_bank(bank, tmp_path / "a.model")
        save_bank(train_bank(cfg, oracle_targets(cfg)), tmp_path / "b.model")
        assert (tmp_path / "a.model").read_bytes() == (tmp_path / "b.model").read_bytes()
        back = load_bank(tmp_path / "a.model")
        for snr in cfg.snr_db:
            assert back.schedule(snr) == bank.schedule(snr)
            assert back.model_for(snr).Y == bank.model_for(snr).Y
        save_bank(back, tmp_path / "c.model")
        assert (tmp_path / "c.model").read_bytes() == (tmp_path / "a.model").read_bytes()

    def test_nearest_point(self, tmp_path):
        cfg = small_cfg(tmp_path)
        bank = train_bank(cfg, oracle_targets(cfg))
        assert bank.model_for(9.9) is bank.models[8.0]
        assert bank.model_for(10.0) is bank.models[8.0]  # ties go to the lower SNR
        assert bank.model_for(100.0) is bank.models[12.0]

    def test_adaptive_cheaper_than_widest_fixed(self, tmp_path):
        cfg = config.parse(SMALL.replace("nt = 2\nnr = 2\norder = 4", "nt = 3\nnr = 3\norder = 16")
                           .replace("snr_db = 4, 8, 12", "snr_db = 18"), out=str(tmp_path))
        bank = train_bank(cfg, oracle_targets(cfg))
        sched = bank.schedule(18.0)
        widest = KSchedule.fixed(max(sched.widths[:-1]), 3, 16)
        assert expected_children(sched, 16) < expected_children(widest, 16)

    def test_full_quantile_matches_ml(self, tmp_path):
        # q = 1.0 targets swept at the training SNR: BER within statistical error of ML
        cfg = config.ExperimentConfig(nt=2, nr=2, order=16, snr_db=(14.0,), detectors=("ml", "adaptive"),
                                      min_errors=300, max_frames=20000, seed=3, quantile=1.0, oracle_samples=300,
                                      val_samples=100, fit_steps=500, meta_tasks=16, meta_steps=5, unroll=10,
                                      out=str(tmp_path))
        bank = train_bank(cfg, oracle_targets(cfg))
        ml, ad = run_sweep(cfg, build_plan(cfg, bank=bank))
        (mlo, mhi), (alo, ahi) = ml.ci, ad.ci
        assert alo <= mhi and mlo <= ahi

    def test_dimension_mismatch(self, tmp_path):
        cfg = small_cfg(tmp_path)
        bank = train_bank(cfg, oracle_targets(cfg))
        wrong = CoefficientBank(3, 4, bank.quantile, bank.lstm, bank.models, bank.meta_history)
        with pytest.raises(ConfigInvalid):
            build_plan(cfg, bank=wrong)

    def test_selector_roundtrip(self, tmp_path):
        hyper = SelectorHyper(layers=1, kernel=3, width=2, channels=2)
        sel = train(2, 2, qam(4), 10.0, TrainingConfig(batches=2, batch_size=4, val_size=4, val_every=1), hyper)
        save_selectors(sel, tmp_path / "s.model")
        back = load_selectors(tmp_path / "s.model")
        assert back.hyper == hyper and back.nt == 2 and back.val_loss == sel.val_loss
        for a, b in zip(sel.nets, back.nets):
            assert a.keys() == b.keys()
            for k in a:
                np.testing.assert_array_equal(a[k], b[k])


class TestCli:
    def write_cfg(self, tmp_path, text=SMALL):
        p = tmp_path / "c.ini"
        p.write_text(text)
        return p

    def test_end_to_end(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path)
        out = tmp_path / "out"
        assert main(["train-coeffs", "--config", str(cfg), "--out", str(out)]) == 0
        model = (out / "coefficients.model").read_bytes()
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["report", "--config", str(cfg), "--out", str(out)]) == 0
        for name in ("targets.csv", "ranks.csv", "ber.csv", "complexity.csv"):
            assert (out / name).read_text().startswith("# metakbest ")
        recs = read_ber_csv(out / "ber.csv")
        assert {r.detector for r in recs} == {"ml", "adaptive", "mmse", "zf", "kbest-2"}
        assert "[ok]" in capsys.readouterr().out
        assert main(["train-coeffs", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "coefficients.model").read_bytes() == model

    def test_seed_changes_results(self, tmp_path):
        cfg = self.write_cfg(tmp_path, SMALL.replace("ml, adaptive, mmse, zf, kbest-2", "zf"))
        main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a")])
        main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "8"])
        assert (tmp_path / "a" / "ber.csv").read_text() != (tmp_path / "b" / "ber.csv").read_text()

    def test_exit_codes(self, tmp_path):
        assert main(["sweep", "--config", str(tmp_path / "missing.ini")]) == 2
        cfg = self.write_cfg(tmp_path)
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "empty")]) == 2  # no model
        assert main(["sweep", "--config", str(cfg), "--seed", str(2**64)]) == 2
        assert main(["report", "--config", str(cfg), "--out", str(tmp_path / "empty")]) == 2
        big = self.write_cfg(tmp_path, SMALL.replace("nt = 2\nnr = 2\norder = 4", "nt = 6\nnr = 6\norder = 16")
                             .replace("ml, adaptive, mmse, zf, kbest-2", "ml"))
        assert main(["sweep", "--config", str(big), "--out", str(tmp_path)]) == 3

    def test_gray_table(self, capsys):
        assert main(["dump-gray-table"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "index,label,re,im"
        assert len(lines) == 17
        assert lines[1].split(",")[1] == "0000"

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "metakbest", "dump-gray-table"], capture_output=True, text=True)
        assert res.returncode == 0 and res.stdout.startswith("index,label")

    def test_usage_error(self):
        with pytest.raises(SystemExit) as e:
            main(["no-such-command"])
        assert e.value.code == 2
