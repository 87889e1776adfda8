"""Command-line entry point.

Settings resolve as built-in defaults < ``--config`` file < explicit flags.
A config file is JSON or TOML holding the keys of one subcommand; the
``manifest.json`` written next to every result is itself a valid config, so
``blindrx <cmd> --config out/manifest.json --out other`` reproduces a run.

Exit codes: 0 success or decision, 1 I/O or input error, 2 no decision
(classify) or no frame found (receive).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .classifier import ClassifierThresholds, classify
from .cyclo import count_cycle_frequencies, scan_table
from .harness import TrialConfig, draw_channel, sweep, trial_rng
from .iqfile import read_iq, write_iq
from .receiver import FrameFormat, LoopConfig, modulate_packet, receive
from .waveform import (AmMessage, ChannelParams, ModClass, PulseShape, apply_channel,
                       normalize, synth_am, synth_linear)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_IO, EXIT_NO_DECISION = 0, 1, 2

_THRESHOLDS = {"t_m20dp": 0.5, "t_m42": 1.155, "t_m40dp": 0.5, "gamma": 15.202,
               "pre_threshold": 0.05, "L_s": 61}

DEFAULTS = {
    "simulate": {"class": "PSK2", "symbols": 1000, "snr": None, "seed": 0, "sps": 8,
                 "rolloff": 0.5, "c0": None, "fo": None, "theta": None, "eps": None,
                 "ka": 0.5, "payload": None, "name": "signal"},
    "classify": {"input": None, **_THRESHOLDS},
    "confusion": {"snr": 10.0, "trials": 2000, "symbols": 1000, "seed": 0, "workers": None,
                  **_THRESHOLDS},
    "sweep": {"snr": [5.0, 10.0], "trials": 2000, "symbols": 1000, "seed": 0, "workers": None,
              **_THRESHOLDS},
    "receive": {"input": None, "gardner_bw": 0.01, "costas_bw": 0.1, "damping": 0.707,
                "audio_cutoff": 0.04, **_THRESHOLDS},
    "test-cycles": {"input": None, "gamma": 15.202, "pre_threshold": 0.05, "L_s": 61},
}


class CliError(Exception):
    """Bad input or unreadable/unwritable file; maps to exit code 1."""


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read config {p}: {exc}") from exc
    try:
        if p.suffix == ".toml":
            data = tomllib.loads(text.decode())
        else:
            data = json.loads(text)
    except (ValueError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot parse config {p}: {exc}") from exc
    if not isinstance(data, dict):
        raise CliError(f"config {p} must be a mapping")
    # a manifest nests the resolved settings under "config"
    if isinstance(data.get("config"), dict):
        data = data["config"]
    return data


def resolve(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    if args.config:
        file_cfg = load_config(args.config)
        unknown = sorted(set(file_cfg) - set(cfg))
        if unknown:
            raise CliError(f"unknown config keys for {command}: {', '.join(unknown)}")
        cfg.update(file_cfg)
    for key in cfg:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    return cfg


def _thresholds(cfg: dict) -> ClassifierThresholds:
    return ClassifierThresholds(**{k: cfg[k] for k in _THRESHOLDS if k in cfg})


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_text(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_manifest(out: Path, command: str, cfg: dict, outputs: list, started: float, **extra):
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "outputs": sorted(str(o) for o in outputs),
        "wall_time_s": round(time.perf_counter() - started, 3),
        **extra,
    }
    _write_text(out / "manifest.json", _dump(manifest))


def _read_input(cfg: dict):
    if not cfg.get("input"):
        raise CliError("no input file given")
    try:
        return read_iq(cfg["input"])
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read {cfg['input']}: {exc}") from exc


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args, cfg: dict, started: float) -> int:
    try:
        mod_class = ModClass.parse(cfg["class"])
        msg = AmMessage(Ka=float(cfg["ka"])) if mod_class is ModClass.AM else None
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    sps = int(cfg["sps"])
    rng = trial_rng(cfg["seed"], mod_class, 0)
    drawn = draw_channel(rng, math.inf if cfg["snr"] is None else float(cfg["snr"]))
    c0 = drawn.c0 if cfg["c0"] is None else complex(*cfg["c0"])
    params = ChannelParams(
        c0=c0,
        fo_T=drawn.fo_T if cfg["fo"] is None else float(cfg["fo"]),
        theta=drawn.theta if cfg["theta"] is None else float(cfg["theta"]),
        epsilon=drawn.epsilon if cfg["eps"] is None else float(cfg["eps"]),
        snr_db=drawn.snr_db,
    )
    sym_seed, noise_seed = (int(s) for s in rng.integers(0, 2**63, 2))
    pulse = PulseShape(float(cfg["rolloff"]), 8, sps)
    if msg is not None:
        x = synth_am(msg, int(cfg["symbols"]) * sps)
        x = x.with_samples(x.samples, sps=sps)  # CFO and delay are scaled per symbol-equivalent
    elif cfg["payload"] is not None:
        if mod_class is not ModClass.PSK2:
            raise CliError("packets are only defined for PSK2")
        try:
            payload = bytes.fromhex(cfg["payload"])
        except ValueError as exc:
            raise CliError(f"payload must be hex: {exc}") from exc
        x = modulate_packet(payload, FrameFormat(), pulse, seed=sym_seed)
    else:
        x = synth_linear(mod_class, int(cfg["symbols"]), pulse, seed=sym_seed)
    try:
        y = apply_channel(x, params, seed=noise_seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    y, _ = normalize(y)
    if mod_class is ModClass.AM:
        y.sps = None
    out = _out_dir(args)
    try:
        iq = write_iq(out / cfg["name"], y, mod_class=mod_class.value, channel=params,
                      seed=cfg["seed"])
    except OSError as exc:
        raise CliError(f"cannot write signal: {exc}") from exc
    write_manifest(out, "simulate", cfg, [iq.name, iq.with_suffix(".json").name], started)
    print(iq)
    return EXIT_OK


def cmd_classify(args, cfg: dict, started: float) -> int:
    y, meta = _read_input(cfg)
    sps = y.sps or 8
    y.sps = sps
    decision = classify(y, meta.get("noise_var"), _thresholds(cfg), PulseShape.receive(sps=sps))
    result = decision.to_dict()
    print(_dump(result), end="")
    if args.out:
        out = _out_dir(args)
        _write_text(out / "decision.json", _dump(result))
        write_manifest(out, "classify", cfg, ["decision.json"], started)
    return EXIT_NO_DECISION if decision.no_decision else EXIT_OK


def _trial_config(cfg: dict, snr: float) -> TrialConfig:
    return TrialConfig(n_symbols=int(cfg["symbols"]), snr_db=snr, n_trials=int(cfg["trials"]),
                       seed=int(cfg["seed"]), thresholds=_thresholds(cfg))


def _workers(cfg: dict) -> int:
    return int(cfg["workers"]) if cfg["workers"] else (os.cpu_count() or 1)


def cmd_confusion(args, cfg: dict, started: float) -> int:
    tc = _trial_config(cfg, float(cfg["snr"]))
    (_, mat), = sweep(tc, [tc.snr_db], workers=_workers(cfg))
    out = _out_dir(args)
    _write_text(out / "confusion.csv", mat.to_csv())
    _write_text(out / "confusion.json", _dump({"snr_db": tc.snr_db, "trial_config": tc.to_dict(),
                                                **mat.to_dict()}))
    write_manifest(out, "confusion", cfg, ["confusion.csv", "confusion.json"], started,
                   workers=_workers(cfg))
    print(mat.format_table())
    return EXIT_OK


def cmd_sweep(args, cfg: dict, started: float) -> int:
    snrs = [float(s) for s in cfg["snr"]] if isinstance(cfg["snr"], list) else [float(cfg["snr"])]
    if not snrs:
        raise CliError("snr list must not be empty")
    tc = _trial_config(cfg, snrs[0])
    results = sweep(tc, snrs, workers=_workers(cfg))
    out = _out_dir(args)
    lines = []
    for snr, mat in results:
        body = mat.to_csv().splitlines()
        if not lines:
            lines.append("snr_db," + body[0])
        lines.extend(f"{snr:g},{row}" for row in body[1:])
    _write_text(out / "sweep.csv", "\n".join(lines) + "\n")
    _write_text(out / "sweep.json", _dump({
        "trial_config": tc.to_dict(),
        "points": [{"snr_db": snr, **mat.to_dict()} for snr, mat in results],
    }))
    write_manifest(out, "sweep", cfg, ["sweep.csv", "sweep.json"], started, workers=_workers(cfg))
    for snr, mat in results:
        print(f"SNR {snr:g} dB")
        print(mat.format_table())
    return EXIT_OK


def cmd_receive(args, cfg: dict, started: float) -> int:
    y, _ = _read_input(cfg)
    loop_cfg = LoopConfig(gardner_bw=float(cfg["gardner_bw"]), costas_bw=float(cfg["costas_bw"]),
                          damping=float(cfg["damping"]))
    result = receive(y, loop_cfg, FrameFormat(), _thresholds(cfg),
                     audio_cutoff=cfg["audio_cutoff"])
    out = _out_dir(args)
    outputs = ["metrics.json"]
    summary = result.summary()
    if result.kind == "am_audio":
        result.am_samples.astype("<f8").tofile(out / "audio.f64")
        outputs.append("audio.f64")
    elif result.header_ok:
        _write_text(out / "payload.hex", result.payload.hex() + "\n")
        outputs.append("payload.hex")
    _write_text(out / "metrics.json", _dump(summary))
    write_manifest(out, "receive", cfg, outputs, started)
    print(_dump(summary), end="")
    if result.kind == "bpsk_packet" and not result.header_ok:
        return EXIT_NO_DECISION
    return EXIT_OK


def cmd_test_cycles(args, cfg: dict, started: float) -> int:
    y, _ = _read_input(cfg)
    if not y.normalized:
        y, _ = normalize(y)
    gamma, pre, L_s = float(cfg["gamma"]), float(cfg["pre_threshold"]), int(cfg["L_s"])
    try:
        rows = scan_table(y, pre, gamma, L_s)
        count = count_cycle_frequencies(y, pre, gamma, L_s)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out = _out_dir(args)
    with open(out / "cycles.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "magnitude", "J", "survivor", "is_cycle"])
        for r in rows:
            J = "" if math.isnan(r["J"]) else f"{r['J']:.6g}"
            w.writerow([f"{r['alpha']:.8f}", f"{r['magnitude']:.6e}", J,
                        int(r["survivor"]), int(r["is_cycle"])])
    _write_text(out / "detections.json", _dump(count.to_dict()))
    write_manifest(out, "test-cycles", cfg, ["cycles.csv", "detections.json"], started)
    print(_dump({"count": count.count, "alphas": count.alphas}), end="")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "confusion": cmd_confusion,
    "sweep": cmd_sweep,
    "receive": cmd_receive,
    "test-cycles": cmd_test_cycles,
}


def _add_thresholds(p):
    g = p.add_argument_group("classifier thresholds")
    g.add_argument("--t-m20dp", dest="t_m20dp", type=float)
    g.add_argument("--t-m42", dest="t_m42", type=float)
    g.add_argument("--t-m40dp", dest="t_m40dp", type=float)
    _add_cycle_flags(g)


def _add_cycle_flags(g):
    g.add_argument("--gamma", type=float, help="cycle test threshold (default 15.202)")
    g.add_argument("--pre-threshold", dest="pre_threshold", type=float,
                   help="minimum |cyclic mean|^2 for a bin to be tested (default 0.05)")
    g.add_argument("--L-s", dest="L_s", type=int, help="spectral window length, odd (default 61)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blindrx", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(name, help_, out_required=True):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON or TOML settings (a manifest.json works too)")
        p.add_argument("--out", required=out_required, help="output directory")
        return p

    p = common("simulate", "synthesize a channel-impaired stream to .iq + .json")
    p.add_argument("--class", dest="class", help="PSK2, PSK4, PSK8, QAM16 or AM")
    p.add_argument("--symbols", type=int, help="symbols (AM: symbol-equivalent length)")
    p.add_argument("--snr", type=float, help="SNR in dB (omit for noiseless)")
    p.add_argument("--seed", type=int)
    p.add_argument("--sps", type=int)
    p.add_argument("--rolloff", type=float)
    p.add_argument("--c0", type=float, nargs=2, metavar=("RE", "IM"), help="channel gain")
    p.add_argument("--fo", type=float, help="frequency offset fo*T (cycles/symbol)")
    p.add_argument("--theta", type=float, help="carrier phase (rad)")
    p.add_argument("--eps", type=float, help="timing offset in symbols, |eps| <= 0.5")
    p.add_argument("--ka", type=float, help="AM modulation index")
    p.add_argument("--payload", help="hex payload; PSK2 only, emits one framed packet")
    p.add_argument("--name", help="output file stem")

    p = common("classify", "classify a stream; prints the decision as JSON", out_required=False)
    p.add_argument("input", nargs="?", help=".iq file (sidecar next to it)")
    _add_thresholds(p)

    for name, help_ in (("confusion", "confusion matrix at one SNR"),
                        ("sweep", "confusion matrices over several SNRs")):
        p = common(name, help_)
        if name == "sweep":
            p.add_argument("--snr", type=float, nargs="+", help="SNR list in dB")
        else:
            p.add_argument("--snr", type=float, help="SNR in dB")
        p.add_argument("--trials", type=int, help="trials per class")
        p.add_argument("--symbols", type=int, help="symbols per trial")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--workers", type=int, help="worker processes (default: all cores)")
        _add_thresholds(p)

    p = common("receive", "demodulate an AM stream or a 2-PSK packet")
    p.add_argument("input", nargs="?")
    p.add_argument("--gardner-bw", dest="gardner_bw", type=float)
    p.add_argument("--costas-bw", dest="costas_bw", type=float)
    p.add_argument("--damping", type=float)
    p.add_argument("--audio-cutoff", dest="audio_cutoff", type=float)
    _add_thresholds(p)

    p = common("test-cycles", "per-bin cyclic-mean magnitude and test statistic")
    p.add_argument("input", nargs="?")
    _add_cycle_flags(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = resolve(args.command, args)
        if "input" in cfg and cfg["input"] is not None:
            cfg["input"] = str(cfg["input"])
        return COMMANDS[args.command](args, cfg, started)
    except CliError as exc:
        print(f"blindrx {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # invalid parameter values (thresholds, loop bandwidths, ...)
        print(f"blindrx {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
