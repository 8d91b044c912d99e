"""Command-line front end.

Exit codes: 0 when every check passes, 2 when a residual exceeds the
tolerance, 3 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

import jsonschema

from .lab import (
    ConfigError,
    ExperimentConfig,
    Report,
    gauge_check,
    noise_experiment,
    trotter_convergence,
    verify_duality,
    write_report,
)
from .models import TABLE1

EXIT_OK, EXIT_RESIDUAL, EXIT_CONFIG = 0, 2, 3

_MAP_HELP = """\
map ids:
  kw      Kramers-Wannier, TFI -> pure Z2 gauge theory (cycle or square torus)
  kw_tri  Kramers-Wannier on the triangular torus, tTFI -> twisted gauge theory
  kw_zn   Z_N Kramers-Wannier, clock model -> Z_N gauge theory (use --N)
  kw_gm   gauging with matter, TL-Ising -> gauge theory with Ising matter (cycle)
  jw      Jordan-Wigner, TL-Ising -> gauged Majorana chain (cycle)
  fs      Fradkin-Shenker, star-plaquette -> gauge theory with Ising matter (square)
"""


def load_schema() -> dict:
    return json.loads(resources.files("lgt_dual").joinpath("config.schema.json").read_text())


def _schema_errors(data) -> list[str]:
    validator = jsonschema.Draft202012Validator(load_schema())
    out = []
    for err in sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path)):
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        out.append(f"{where}: {err.message}")
    return out


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON config, apply flag overrides, validate, and fill defaults."""
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must contain a JSON object")
    for key, val in (overrides or {}).items():
        if key in ("couplings", "noise") and isinstance(val, dict):
            merged = dict(data.get(key) or {})
            merged.update(val)
            data[key] = merged
        else:
            data[key] = val
    errors = _schema_errors(data)
    if errors:
        raise ConfigError("; ".join(errors))
    return ExperimentConfig.from_dict(data)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--map", help="duality map id (see list-models)")
    p.add_argument("--lattice", help="cycle:L, square:AxB or triangular:AxB")
    p.add_argument("--N", type=int, help="local dimension (only kw_zn accepts N > 2)")
    p.add_argument("--lambda", dest="lambda_", type=float, help="coupling lambda")
    p.add_argument("--g", type=float, help="coupling g")
    p.add_argument("--h", type=float, help="coupling h")
    p.add_argument("--mu", type=float, help="coupling mu")
    p.add_argument("--t", type=float, help="evolution time (imaginary time with --imaginary)")
    p.add_argument("--k", type=int, help="number of Trotter steps")
    p.add_argument("--imaginary", action="store_true", default=None, help="imaginary-time mode")
    p.add_argument("--mode", choices=["exhaustive", "sampled"], help="branch enumeration mode")
    p.add_argument("--shots", type=int, help="samples (sampled mode) or runs (noise)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--initial", help="auto, plus, zero, random, random-symmetric or levin-gu")
    p.add_argument("--noise-channel", help="z-rotation or unitary")
    p.add_argument("--noise-p", type=float, help="per-site noise probability")
    p.add_argument("--noise-seed", type=int, help="noise seed")
    p.add_argument("--counter-policy", choices=["canonical", "alternate"])
    p.add_argument("--tolerance", type=float, help="residual tolerance (default 1e-10)")
    p.add_argument("--output", help="report path; prints the JSON report when omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lgt-dual",
        description="Verify measurement-assisted duality maps by exact simulation.",
        epilog=_MAP_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("verify", help="check the duality identity branch by branch",
                       epilog=_MAP_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_config_flags(p)
    p = sub.add_parser("noise", help="noisy source evolution followed by sampled dualization")
    _add_config_flags(p)
    p = sub.add_parser("converge", help="duality residual and Trotter error versus k")
    _add_config_flags(p)
    p.add_argument("--ks", default="4,8,16,32", help="comma-separated step counts")
    p.add_argument("--csv", help="also write the convergence table as CSV")
    p = sub.add_parser("gauge-check", help="stabilizer expectations after dualizing at t = 0")
    _add_config_flags(p)
    sub.add_parser("list-models", help="print the supported model pairs and their map ids")
    return parser


def _overrides(ns: argparse.Namespace) -> dict:
    out: dict = {}
    for key in ("map", "lattice", "N", "t", "k", "imaginary", "mode", "shots", "seed",
                "initial", "counter_policy", "tolerance", "output"):
        val = getattr(ns, key, None)
        if val is not None:
            out[key] = val
    cp = {name: getattr(ns, attr) for name, attr in
          (("lambda", "lambda_"), ("g", "g"), ("h", "h"), ("mu", "mu"))
          if getattr(ns, attr, None) is not None}
    if cp:
        out["couplings"] = cp
    nz = {name: getattr(ns, attr) for name, attr in
          (("channel", "noise_channel"), ("p", "noise_p"), ("seed", "noise_seed"))
          if getattr(ns, attr, None) is not None}
    if nz:
        out["noise"] = nz
    return out


def _emit(report: Report, cfg: ExperimentConfig, csv_path=None) -> None:
    if cfg.output:
        write_report(report, cfg.output, csv_path)
        state = "PASS" if report.passed else "FAIL"
        print(f"{report.kind} {cfg.map}: {state} -> {cfg.output}")
    else:
        sys.stdout.write(report.to_json())
        if csv_path is not None and report.table:
            Path(csv_path).write_text(report.table_csv())


def list_models() -> str:
    lines = [f"{'dim':>3}  {'map':<7} {'source':<10} {'target':<8} description"]
    for row in TABLE1:
        lines.append(
            f"{row.dim:>3}  {row.map_id:<7} {row.source:<10} {row.target:<8} "
            f"{row.source_name} -> {row.target_name}"
        )
    return "\n".join(lines)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command == "list-models":
            print(list_models())
            return EXIT_OK
        cfg = load_config(ns.config, _overrides(ns))
        if ns.command == "verify":
            report = verify_duality(cfg)
            _emit(report, cfg)
        elif ns.command == "noise":
            if cfg.noise is None:
                raise ConfigError("noise: the noise subcommand needs a noise block or --noise-p")
            report = noise_experiment(cfg)
            _emit(report, cfg)
        elif ns.command == "converge":
            try:
                ks = [int(k) for k in ns.ks.split(",") if k.strip()]
            except ValueError:
                raise ConfigError(f"--ks: cannot parse {ns.ks!r}") from None
            if not ks or min(ks) < 1:
                raise ConfigError("--ks: step counts must be positive")
            report = trotter_convergence(cfg, ks)
            _emit(report, cfg, ns.csv)
        else:
            report = gauge_check(cfg)
            _emit(report, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not report.passed:
        print(f"residual check failed: {json.dumps(report.summary, sort_keys=True)}", file=sys.stderr)
        return EXIT_RESIDUAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
