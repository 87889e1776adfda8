import json

import numpy as np
import pytest

from blindrx.cli import main
from blindrx.iqfile import read_iq


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSimulate:
    def test_psk2_file(self, tmp_path, capsys):
        code, _, _ = run(["simulate", "--class", "PSK2", "--symbols", 1000, "--out", tmp_path],
                         capsys)
        assert code == 0
        assert (tmp_path / "signal.iq").stat().st_size == 8000 * 16
        meta = json.loads((tmp_path / "signal.json").read_text())
        assert meta["n_samples"] == 8000 and meta["class"] == "PSK2"
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "simulate" and "wall_time_s" in manifest

    def test_overmodulated_am(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--class", "AM", "--ka", 1.2, "--out", tmp_path], capsys)
        assert code != 0 and "overmodulation" in err

    def test_reproducible_from_manifest(self, tmp_path, capsys):
        run(["simulate", "--class", "QAM16", "--snr", 9, "--seed", 4, "--out", tmp_path / "a"],
            capsys)
        run(["simulate", "--config", tmp_path / "a" / "manifest.json", "--out", tmp_path / "b"],
            capsys)
        assert (tmp_path / "a/signal.iq").read_bytes() == (tmp_path / "b/signal.iq").read_bytes()
        assert (tmp_path / "a/signal.json").read_text() == (tmp_path / "b/signal.json").read_text()

    def test_precedence(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text('class = "PSK8"\nsymbols = 300\nsnr = 12.0\n')
        run(["simulate", "--config", cfg, "--symbols", 200, "--out", tmp_path / "o"], capsys)
        meta = json.loads((tmp_path / "o/signal.json").read_text())
        assert meta["class"] == "PSK8" and meta["n_samples"] == 1600
        resolved = json.loads((tmp_path / "o/manifest.json").read_text())["config"]
        assert resolved["symbols"] == 200 and resolved["snr"] == 12.0

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"colour": 1}')
        code, _, err = run(["simulate", "--config", cfg, "--out", tmp_path], capsys)
        assert code == 1 and "colour" in err


class TestClassify:
    def test_roundtrip_and_label(self, tmp_path, capsys):
        run(["simulate", "--class", "QAM16", "--snr", 10, "--seed", 1, "--out", tmp_path], capsys)
        stream, _ = read_iq(tmp_path / "signal.iq")
        code, out, _ = run(["classify", tmp_path / "signal.iq"], capsys)
        assert code == 0
        result = json.loads(out)
        assert result["label"] == "QAM16"
        assert [s["stage"] for s in result["trace"]] == [1, 2, 3]
        assert stream.samples.dtype == np.complex128

    def test_truncated(self, tmp_path, capsys):
        run(["simulate", "--out", tmp_path], capsys)
        iq = tmp_path / "signal.iq"
        iq.write_bytes(iq.read_bytes()[:-5])
        code, _, err = run(["classify", iq], capsys)
        assert code == 1 and "cannot read" in err

    def test_missing_input(self, tmp_path, capsys):
        code, _, _ = run(["classify", tmp_path / "nope.iq"], capsys)
        assert code == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_noise_only(self, tmp_path, capsys, seed):
        from blindrx.iqfile import write_iq
        from blindrx.waveform import IqStream, normalize
        rng = np.random.default_rng(seed)
        y, _ = normalize(IqStream(rng.standard_normal(8000) + 1j * rng.standard_normal(8000),
                                  sps=8, noise_var=2.0))
        write_iq(tmp_path / "n", y)
        code, out, _ = run(["classify", tmp_path / "n.iq"], capsys)
        label = json.loads(out)["label"]
        assert (code == 2 and label is None) or (code == 0 and label != "AM")


class TestBatch:
    def test_confusion_deterministic(self, tmp_path, capsys):
        args = ["confusion", "--snr", 10, "--trials", 10, "--symbols", 400]
        assert run(args + ["--out", tmp_path / "a", "--workers", 1], capsys)[0] == 0
        assert run(args + ["--out", tmp_path / "b", "--workers", 2], capsys)[0] == 0
        for name in ("confusion.csv", "confusion.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        run(["confusion", "--config", tmp_path / "a/manifest.json", "--out", tmp_path / "c"], capsys)
        assert (tmp_path / "a/confusion.csv").read_bytes() == (tmp_path / "c/confusion.csv").read_bytes()

    def test_sweep(self, tmp_path, capsys):
        code, _, _ = run(["sweep", "--snr", 5, 10, "--trials", 5, "--symbols", 400,
                          "--out", tmp_path], capsys)
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("snr_db,true,PSK2") and len(lines) == 11
        assert [p["snr_db"] for p in json.loads((tmp_path / "sweep.json").read_text())["points"]] == [5.0, 10.0]


class TestReceive:
    def test_bpsk_packet(self, tmp_path, capsys):
        run(["simulate", "--class", "PSK2", "--payload", "c0ffee0123", "--snr", 10, "--fo", 0.004,
             "--out", tmp_path / "sig"], capsys)
        code, _, _ = run(["receive", tmp_path / "sig/signal.iq", "--out", tmp_path / "rx"], capsys)
        assert code == 0
        assert (tmp_path / "rx/payload.hex").read_text().strip() == "c0ffee0123"
        metrics = json.loads((tmp_path / "rx/metrics.json").read_text())
        assert metrics["sfd_found"] and "gardner_error_rms" in metrics["metrics"]

    def test_am_audio(self, tmp_path, capsys):
        run(["simulate", "--class", "AM", "--snr", 20, "--out", tmp_path / "sig"], capsys)
        code, _, _ = run(["receive", tmp_path / "sig/signal.iq", "--out", tmp_path / "rx"], capsys)
        assert code == 0
        audio = np.fromfile(tmp_path / "rx/audio.f64", dtype="<f8")
        assert len(audio) == 8000 and np.std(audio) > 0.01

    def test_no_frame(self, tmp_path, capsys):
        run(["simulate", "--class", "PSK2", "--snr", 10, "--out", tmp_path / "sig"], capsys)
        code, _, _ = run(["receive", tmp_path / "sig/signal.iq", "--out", tmp_path / "rx"], capsys)
        assert code == 2 and not (tmp_path / "rx/payload.hex").exists()


class TestCycles:
    def test_noise_no_detections(self, tmp_path, capsys):
        from blindrx.iqfile import write_iq
        from blindrx.waveform import IqStream
        rng = np.random.default_rng(0)
        write_iq(tmp_path / "n", IqStream(rng.standard_normal(8000) + 1j * rng.standard_normal(8000)))
        code, out, _ = run(["test-cycles", tmp_path / "n.iq", "--out", tmp_path / "c"], capsys)
        assert code == 0 and json.loads(out)["count"] == 0
        rows = (tmp_path / "c/cycles.csv").read_text().splitlines()
        assert rows[0] == "alpha,magnitude,J,survivor,is_cycle" and len(rows) == 8001

    def test_am_detected(self, tmp_path, capsys):
        run(["simulate", "--class", "AM", "--snr", 10, "--out", tmp_path / "sig"], capsys)
        code, out, _ = run(["test-cycles", tmp_path / "sig/signal.iq", "--out", tmp_path / "c"],
                           capsys)
        assert json.loads(out)["count"] >= 1
