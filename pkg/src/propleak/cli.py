"""Command line: run, sweep, report, serve, attack-remote."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness as H
from . import models as M
from . import server

log = logging.getLogger("propleak")


def _values(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _write(results, args) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, r in enumerate(results):
        name = f"result-{i:02d}-{r.digest}.json" if len(results) > 1 else f"result-{r.digest}.json"
        r.save(out / name, include_timing=args.timing)
    csv_path, txt_path = H.emit_report(results, out, include_timing=args.timing)
    sys.stdout.write(txt_path.read_text(encoding="utf-8"))
    log.info("wrote %s and %s", csv_path, txt_path)


def _status(results) -> int:
    for r in results:
        try:
            H.check_failures(r)
        except H.RunFailure as exc:
            log.error("%s: %s", r.digest, exc)
            return H.EXIT_RUNTIME
    return H.EXIT_OK


def cmd_run(args) -> int:
    cfg = H.ExperimentConfig.from_file(args.config)
    hook = None
    if args.save_target:
        def hook(i, model, truth):
            if i == 0:
                M.save_model(model, args.save_target)
                log.info("saved target of repetition 0 (truth %s) to %s", truth, args.save_target)
    result = H.run_experiment(cfg, on_target=hook)
    _write([result], args)
    return _status([result])


def cmd_sweep(args) -> int:
    cfg = H.ExperimentConfig.from_file(args.config)
    axis = args.axis or H.DEFAULT_AXIS.get(cfg.family)
    if axis is None:
        raise H.ConfigError(["--axis is required for this family"])
    results = H.run_sweep(cfg, axis, _values(args.values))
    _write(results, args)
    return _status(results)


def cmd_report(args) -> int:
    results = [H.ExperimentResult.load(p) for p in args.results]
    if args.out:
        _write(results, args)
    else:
        sys.stdout.write(H.report_text(results, args.timing))
    return H.EXIT_OK


def cmd_serve(args) -> int:
    model = M.load_model(args.model)
    timeout = args.timeout_ms / 1000.0 if args.timeout_ms else None
    handle = server.serve(model, args.listen, idle_timeout=timeout)
    print(f"listening on {handle.address}", flush=True)
    try:
        handle.wait()
    except KeyboardInterrupt:
        handle.close()
    return H.EXIT_OK


def cmd_attack_remote(args) -> int:
    cfg = H.ExperimentConfig.from_file(args.config)
    prediction, confidence = H.attack_remote(cfg, args.endpoint, timeout=args.timeout_ms / 1000.0)
    print(f"prediction = {prediction}")
    print(f"confidence = {confidence:.6f}")
    return H.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="propleak", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def outputs(sp):
        sp.add_argument("--out", default="results", help="directory for result and report files")
        sp.add_argument("--timing", action="store_true", help="include wall-clock time (reports stop being reproducible)")

    sp = sub.add_parser("run", help="run one experiment config")
    sp.add_argument("config")
    sp.add_argument("--save-target", metavar="PATH", help="save the target model of repetition 0")
    outputs(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run a config once per axis value")
    sp.add_argument("config")
    sp.add_argument("--axis", choices=sorted(H.AXES))
    sp.add_argument("--values", required=True, help="comma-separated values")
    outputs(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="tabulate saved results")
    sp.add_argument("results", nargs="+")
    sp.add_argument("--out", default=None)
    sp.add_argument("--timing", action="store_true")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("serve", help="answer queries for a saved model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--listen", default="127.0.0.1:7000", help="host:port")
    sp.add_argument("--timeout-ms", type=int, default=0, help="close idle connections after this long")
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("attack-remote", help="attack a served model")
    sp.add_argument("config")
    sp.add_argument("--endpoint", required=True, help="host:port")
    sp.add_argument("--timeout-ms", type=int, default=10_000)
    sp.set_defaults(func=cmd_attack_remote)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except H.ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return H.EXIT_CONFIG
    except H.RunFailure as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return H.EXIT_RUNTIME
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return H.EXIT_RUNTIME
