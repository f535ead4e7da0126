"""Command-line entry point: ``qutrit-link <command> --config run.json``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config, resolve
from .detection import (DetectorModel, estimate_ratio, expected_ratio, fidelity_estimate,
                        simulate_readout)
from .errors import ConfigError, ProtocolError
from .io import atomic_write, csv_text, json_text, round12
from .params import REFERENCE_PARAMS_MHZ, validate_regime
from .pipeline import (entangle_summary, receiver_summary, run_oracle, run_pulse_design,
                       run_receiver, run_sender, table1)
from .sender import waveform_columns

COMMANDS = ("validate", "sender", "solve-pulse", "receiver", "oracle", "entangle", "detect", "table1")

EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, help="detection RNG seed (overrides detection.seed)")
    common.add_argument("--format", choices=("csv", "json"),
                        help="json: summaries only; csv: also trajectory tables")
    parser = _Parser(prog="qutrit-link", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


class _Run:
    def __init__(self, cfg: RunConfig, command: str, out_dir: Path, fmt: str):
        self.cfg, self.command, self.out_dir, self.fmt = cfg, command, out_dir, fmt
        self.written = []

    def provenance(self) -> dict:
        return {"command": self.command, "version": __version__, "config": self.cfg.resolved}

    def write_json(self, name: str, payload: dict):
        doc = self.provenance()
        doc.update(payload)
        self.written.append(atomic_write(self.out_dir / name, json_text(doc)))

    def write_csv(self, name: str, columns: dict):
        config_line = json.dumps(round12(self.cfg.resolved), separators=(",", ":"))
        comments = [f"qutrit_link {__version__} {self.command}", f"config {config_line}"]
        self.written.append(atomic_write(self.out_dir / name, csv_text(columns, comments)))


def _cmd_validate(run: _Run) -> int:
    cfg = run.cfg
    report = validate_regime(cfg.params, cfg.profile1, cfg.sender_grid)
    run.write_json("validate.json", {
        "checks": [c.as_dict() for c in report.checks],
        "passed": report.passed,
        "violated": report.violated,
    })
    for c in report.checks:
        print(f"{c.name:28s} ratio {c.ratio:10.4g}  threshold {c.threshold:g}  {c.status}")
    return EXIT_INVALID if report.violated else EXIT_OK


def _cmd_sender(run: _Run) -> int:
    stage = run_sender(run.cfg)
    run.write_json("sender.json", stage.summary())
    if run.fmt == "csv":
        run.write_csv("sender_waveform.csv", waveform_columns(stage.params, stage.profile1, stage.wavepacket))
    return EXIT_OK


def _cmd_solve_pulse(run: _Run) -> int:
    stage = run_sender(run.cfg)
    plan = run_pulse_design(run.cfg, stage)
    run.write_json("solve_pulse.json", plan.as_dict())
    return EXIT_OK


def _cmd_receiver(run: _Run) -> int:
    stage = run_sender(run.cfg)
    rs = run_receiver(stage, run_pulse_design(run.cfg, stage))
    run.write_json("receiver.json", receiver_summary(rs))
    if run.fmt == "csv":
        run.write_csv("receiver_areas.csv", rs.result.columns())
    return EXIT_OK


def _cmd_oracle(run: _Run) -> int:
    stage = run_sender(run.cfg)
    rs = run_receiver(stage, run_pulse_design(run.cfg, stage))
    branches, report = run_oracle(stage, rs)
    run.write_json("oracle.json", {
        "plan": rs.plan.as_dict(),
        "two_photon_final": branches.two_photon_populations[:, -1],
        "one_photon_final": branches.one_photon_populations[:, -1],
        "approximation": report.as_dict(),
    })
    if run.fmt == "csv":
        run.write_csv("oracle_trajectory.csv", branches.columns())
    return EXIT_OK


def _cmd_entangle(run: _Run) -> int:
    stage = run_sender(run.cfg)
    rs = run_receiver(stage, run_pulse_design(run.cfg, stage))
    run.write_json("entangle.json", entangle_summary(stage, rs))
    print(f"E = {rs.joint.entropy:.6f} bits, complete = {rs.joint.is_complete}")
    return EXIT_OK


def _cmd_detect(run: _Run) -> int:
    d = run.cfg.block("detection")
    beta2 = d["beta2"]
    if beta2 is None:
        beta2 = list(run_sender(run.cfg).result.beta2)
    det = DetectorModel(d["efficiency"], d["dark_prob"], d["seed"])
    rec = simulate_readout(beta2, det, d["n_trials"], tol=1e-3)
    payload = {
        "n_trials": rec.n_trials,
        "n_plus": rec.n_plus,
        "n_minus": rec.n_minus,
        "n_silent": rec.n_silent,
        "n_second_stage": rec.n_second_stage,
        "ratio": None, "ratio_se": None,
        "expected_ratio": expected_ratio([b / sum(beta2) for b in beta2]),
        "fidelity": None, "fidelity_se": None,
        "seed": det.seed,
    }
    if rec.n_minus > 0:
        est = estimate_ratio(rec)
        payload["ratio"], payload["ratio_se"] = est.ratio, est.se
    try:
        fid = fidelity_estimate(rec, d["target"])
        payload["fidelity"], payload["fidelity_se"] = fid.fidelity, fid.se
    except ProtocolError:
        pass
    run.write_json("detect.json", payload)
    return EXIT_OK


def _cmd_table1(run: _Run) -> int:
    rows = table1(run.cfg.params, run.cfg.block("sender")["t0"] or 0.0)
    if run.fmt == "csv":
        run.write_csv("table1.csv", {
            "T1_us": [r["T1_us"] for r in rows],
            "beta2_m1": [r["beta2"][0] for r in rows],
            "beta2_0": [r["beta2"][1] for r in rows],
            "beta2_p1": [r["beta2"][2] for r in rows],
            "E_bits": [r["entropy_bits"] for r in rows],
            "reference_beta2_m1": [r["reference_beta2"][0] for r in rows],
            "reference_beta2_0": [r["reference_beta2"][1] for r in rows],
            "reference_beta2_p1": [r["reference_beta2"][2] for r in rows],
            "reference_E_bits": [r["reference_entropy_bits"] for r in rows],
        })
    else:
        run.write_json("table1.json", {"rows": rows})
    for r in rows:
        b = ", ".join(f"{x:.4g}" for x in r["beta2"])
        pb = ", ".join(f"{x:g}" for x in r["reference_beta2"])
        print(f"T1 = {r['T1_us']:<5g} beta2 = ({b})  E = {r['entropy_bits']:.3f}   "
              f"reference: ({pb})  E = {r['reference_entropy_bits']:g}")
    return EXIT_OK


HANDLERS = {
    "validate": _cmd_validate,
    "sender": _cmd_sender,
    "solve-pulse": _cmd_solve_pulse,
    "receiver": _cmd_receiver,
    "oracle": _cmd_oracle,
    "entangle": _cmd_entangle,
    "detect": _cmd_detect,
    "table1": _cmd_table1,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.config is None:
            if args.command != "table1":
                raise ConfigError(f"{args.command} requires --config")
            cfg = resolve({"params": dict(REFERENCE_PARAMS_MHZ)}, "table1")
        else:
            cfg = load_config(args.config, args.command)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.block("detection")["seed"] = args.seed
        out_dir = Path(args.out if args.out is not None else cfg.block("output")["dir"])
        fmt = args.format or cfg.block("output")["format"]
        cfg.block("output")["format"] = fmt
        runner = _Run(cfg, args.command, out_dir, fmt)
        code = HANDLERS[args.command](runner)
        for path in runner.written:
            print(f"wrote {path}")
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ProtocolError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
