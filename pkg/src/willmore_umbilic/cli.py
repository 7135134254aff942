"""Command-line front end: ``catalog | analyze | verify | umbilic | flow``.

Exit codes: 0 success, 1 computation or tolerance failure, 2 usage error.
Outputs carry no timestamps, so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .chart import CATALOG, CATALOG_VERSION, AmbientSpace, IsothermalityError, catalog_chart, sample
from .fields import Field
from .flow import FlowConfig, run_flow
from .geometry import general_bundle, geometry_bundle
from .residual import OPERATIONS, build_bundle
from .synthetic import SUITE, synthetic_field
from .umbilic import ClassifyConfig, classify

SUBCOMMANDS = ("catalog", "analyze", "verify", "umbilic", "flow")
AMBIENTS = ("euclidean", "sphere", "hyperbolic")
DEFAULT_N = {"analyze": [128], "verify": [64, 128], "umbilic": [128], "flow": [32]}


class UsageError(ValueError):
    pass


# run configuration ------------------------------------------------------------
@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    chart: str | None = None
    params: dict = field(default_factory=dict)
    ambient: str = "euclidean"
    n: tuple[int, ...] = ()
    order: int = 2
    eps_rel: float = 0.02
    out: str | None = None
    json: bool = False
    synthetic: str | None = None
    steps: int = 200
    tolerances: str | None = None

    def validate(self) -> RunConfig:
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.ambient not in AMBIENTS:
            raise UsageError(f"unknown ambient {self.ambient!r}")
        if self.order not in (2, 4):
            raise UsageError("--order must be 2 or 4")
        if self.chart is not None:
            try:
                catalog_chart(self.chart, self.params, self.ambient)
            except (KeyError, ValueError) as e:
                raise UsageError(str(e)) from None
        if self.synthetic is not None and self.synthetic not in SUITE:
            raise UsageError(f"unknown synthetic field {self.synthetic!r}; known: {sorted(SUITE)}")
        if any(k < 16 for k in self.n):
            raise UsageError("--n values must be at least 16")
        if not 0 < self.eps_rel < 1:
            raise UsageError("--eps-rel must lie in (0, 1)")
        if self.steps < 0:
            raise UsageError("--steps must be nonnegative")
        return self

    def echo(self) -> dict:
        d = asdict(self)
        d["n"] = list(self.n)
        d.pop("json")
        return d


def _single_n(cfg: RunConfig) -> int:
    if len(cfg.n) != 1:
        raise UsageError(f"{cfg.subcommand} takes a single --n value")
    return cfg.n[0]


# output helpers ----------------------------------------------------------------
def _num(v) -> str:
    return repr(float(v))


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def field_csv(f: Field) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    X, Y = np.meshgrid(f.x, f.y, indexing="ij")
    if f.is_complex:
        w.writerow(["x", "y", "re", "im"])
        for x, y, v in zip(X.ravel(), Y.ravel(), f.values.ravel()):
            w.writerow([_num(x), _num(y), _num(v.real), _num(v.imag)])
    else:
        w.writerow(["x", "y", "value"])
        for x, y, v in zip(X.ravel(), Y.ravel(), f.values.ravel()):
            w.writerow([_num(x), _num(y), _num(v)])
    return buf.getvalue()


def _out_dir(cfg: RunConfig, default: str) -> str:
    return cfg.out or os.path.join("out", default)


def _norms(f: Field) -> dict:
    return {"sup": f.sup(), "rms": f.rms(), "margin": f.margin, "shape": list(f.shape)}


def _manifest(cfg: RunConfig, **extra) -> dict:
    doc = {
        "command": cfg.subcommand,
        "config": cfg.echo(),
        "catalog_version": CATALOG_VERSION,
        "package_version": __version__,
        "stencil_order": cfg.order,
    }
    doc.update(extra)
    return doc


# subcommands -------------------------------------------------------------------
def cmd_catalog(cfg: RunConfig, stdout) -> int:
    entries = []
    for name, e in CATALOG.items():
        entries.append(
            {
                "name": name,
                "params": e["params"],
                "isothermal": e["isothermal"],
                "willmore": e["willmore"],
                "minimal_in": list(e["minimal_in"]),
                "ambients": list(AMBIENTS) if e["isothermal"] else ["euclidean"],
                "periodic": [bool(e["domain"][4]), bool(e["domain"][5])],
                "description": e["description"],
            }
        )
    if cfg.json:
        stdout.write(_json_text({"catalog_version": CATALOG_VERSION, "charts": entries}))
    else:
        for e in entries:
            stdout.write(
                f"{e['name']:<18} isothermal={str(e['isothermal']).lower():<5} "
                f"ambients={','.join(e['ambients']):<27} params={json.dumps(e['params'], sort_keys=True)}\n"
            )
    return 0


def cmd_analyze(cfg: RunConfig, stdout) -> int:
    n = _single_n(cfg)
    chart = catalog_chart(cfg.chart, cfg.params, cfg.ambient)
    b = geometry_bundle(sample(chart, n), cfg.ambient, cfg.order)
    fields = {
        "e2u": b.e2u,
        "H": b.H,
        "A0norm": b.A0_sq.with_values(np.sqrt(b.A0_sq.values)),
        "phi_re": b.phi.real,
        "phi_im": b.phi.imag,
    }
    out = _out_dir(cfg, f"analyze_{cfg.chart}")
    for name, f in fields.items():
        write_atomic(os.path.join(out, f"{name}.csv"), field_csv(f))
    doc = _manifest(cfg, fields={k: _norms(v) for k, v in fields.items()}, files=sorted(f"{k}.csv" for k in fields))
    write_atomic(os.path.join(out, "manifest.json"), _json_text(doc))
    if cfg.json:
        stdout.write(_json_text(doc))
    else:
        stdout.write(f"wrote {len(fields)} fields and manifest.json to {out}\n")
    return 0


def load_tolerances(path: str | None) -> dict:
    if path is None:
        text = resources.files("willmore_umbilic").joinpath("data/tolerances.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    reg = json.loads(text)
    unknown = set(reg.get("identities", {})) - set(OPERATIONS)
    if unknown:
        raise UsageError(f"tolerance registry names unknown identities: {sorted(unknown)}")
    for key in ("identities", "non_willmore_controls", "noise_floor"):
        if key not in reg:
            raise UsageError(f"tolerance registry is missing {key!r}")
    return reg


def _applies(rule: str, chart, ambient: str, controls) -> bool:
    if rule == "isothermal":
        return chart.isothermal
    if rule == "willmore":
        return chart.isothermal and chart.willmore and chart.name not in controls
    if rule == "minimal":
        return chart.isothermal and ambient in chart.minimal_in
    raise UsageError(f"unknown applicability rule {rule!r}")


def verify_records(cfg: RunConfig, registry: dict) -> tuple[list[dict], list[str]]:
    chart = catalog_chart(cfg.chart, cfg.params, cfg.ambient)
    controls = registry["non_willmore_controls"]
    floor = registry["noise_floor"]
    ops = []
    if chart.name in controls:
        ops.append(("willmore_residual", None))
    for op, rule in registry["identities"].items():
        if chart.name in controls and op == "willmore_residual":
            continue
        if _applies(rule.get("applies", "isothermal"), chart, cfg.ambient, controls):
            ops.append((op, rule))
    if not chart.isothermal and cfg.ambient != "euclidean":
        raise UsageError("non-isothermal charts support the Euclidean ambient only")

    bundles = [build_bundle(chart, n, cfg.order, cfg.ambient) for n in cfg.n]
    records, failures = [], []
    for op, rule in ops:
        prev = None
        for n, b in zip(cfg.n, bundles):
            rep = OPERATIONS[op](b, cfg.order)
            rec = rep.record()
            rec["operation"] = op
            rec["flags"] = dict(rep.flags)
            rec["order"] = None
            if prev is not None and not (prev.floor_limited or rep.floor_limited):
                rec["order"] = float(np.log(prev.sup_normalized / rep.sup_normalized) / np.log(n / prev_n))
            if rule is None:
                lo = controls[chart.name]["willmore_residual_min"]
                ok = rep.sup_normalized >= lo
                rec["status"] = "control" if ok else "fail"
                rec["must_pass"] = True
                if not ok:
                    failures.append(f"{op} n={n}: control residual {rep.sup_normalized:.3e} below {lo:.0e}")
            else:
                ok = rep.sup_normalized <= rule["max_sup_normalized"]
                why = "" if ok else f"sup_normalized {rep.sup_normalized:.3e} > {rule['max_sup_normalized']:.0e}"
                if ok and rec["order"] is not None and prev.sup_normalized > floor:
                    need = rule["min_order_fraction"] * cfg.order
                    if rec["order"] < need:
                        ok, why = False, f"measured order {rec['order']:.2f} < {need:.2f}"
                rec["must_pass"] = bool(rule.get("must_pass", True))
                rec["status"] = "pass" if ok else "fail"
                if not ok and rec["must_pass"]:
                    failures.append(f"{op} n={n}: {why}")
            records.append(rec)
            prev, prev_n = rep, n
    return records, failures


def _records_csv(records: list[dict]) -> str:
    cols = ["operation", "chart", "ambient", "n", "stencil_order", "sup_raw", "sup_normalized", "l2_normalized", "floor_limited", "order", "status"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_num(r[c]) if isinstance(r[c], float) else ("" if r[c] is None else r[c]) for c in cols])
    return buf.getvalue()


def cmd_verify(cfg: RunConfig, stdout) -> int:
    registry = load_tolerances(cfg.tolerances)
    records, failures = verify_records(cfg, registry)
    out = _out_dir(cfg, f"verify_{cfg.chart}")
    write_atomic(os.path.join(out, "verify.csv"), _records_csv(records))
    write_atomic(os.path.join(out, "verify.json"), _json_text(_manifest(cfg, records=records, failures=failures)))
    if cfg.json:
        stdout.write(_json_text({"records": records, "failures": failures}))
    else:
        for r in records:
            order = "" if r["order"] is None else f" order={r['order']:.2f}"
            stdout.write(f"{r['operation']:<24} n={r['n']:<4} sup={r['sup_raw']:.3e} norm={r['sup_normalized']:.3e}{order} {r['status']}\n")
    for f in failures:
        sys.stderr.write(f"FAILED {f}\n")
    return 1 if failures else 0


def _components_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["component", "kind", "index", "x", "y", "order"])
    for k, c in enumerate(report.components):
        if c.kind == "isolated":
            w.writerow([k, c.kind, 0, _num(c.point[0]), _num(c.point[1]), c.order])
        elif c.kind == "curve":
            for i, (x, y) in enumerate(c.vertices):
                w.writerow([k, c.kind, i, _num(x), _num(y), ""])
        else:
            x0, y0, x1, y1 = c.bbox
            for i, (x, y) in enumerate(((x0, y0), (x1, y0), (x1, y1), (x0, y1))):
                w.writerow([k, c.kind, i, _num(x), _num(y), ""])
    return buf.getvalue()


def cmd_umbilic(cfg: RunConfig, stdout) -> int:
    n = _single_n(cfg)
    config = ClassifyConfig(eps_rel=cfg.eps_rel)
    if cfg.synthetic is not None:
        report = classify(synthetic_field(cfg.synthetic, n), config)
        label = cfg.synthetic
    else:
        chart = catalog_chart(cfg.chart, cfg.params, cfg.ambient)
        report = classify(geometry_bundle(sample(chart, n), cfg.ambient, cfg.order), config)
        label = cfg.chart
    doc = _manifest(cfg, report=report.to_dict())
    out = _out_dir(cfg, f"umbilic_{label}")
    write_atomic(os.path.join(out, "umbilic.json"), _json_text(doc))
    write_atomic(os.path.join(out, "components.csv"), _components_csv(report))
    if cfg.json:
        stdout.write(_json_text(report.to_dict()))
    else:
        kinds = [c.kind for c in report.components]
        stdout.write(
            f"totally_umbilic={str(report.totally_umbilic).lower()} components={len(kinds)} "
            f"isolated={kinds.count('isolated')} curve={kinds.count('curve')} unresolved={kinds.count('unresolved')}\n"
        )
    return 0


def cmd_flow(cfg: RunConfig, stdout) -> int:
    n = _single_n(cfg)
    chart = catalog_chart(cfg.chart, cfg.params)
    trace, state = run_flow(chart, FlowConfig(max_steps=cfg.steps, order=cfg.order), n=n)
    if trace.status == "stalled" and len(trace.records) == 1:
        sys.stderr.write("flow stalled before any accepted step\n")
        return 1
    out = _out_dir(cfg, f"flow_{cfg.chart}")
    write_atomic(os.path.join(out, "trace.csv"), trace.to_csv())
    b = general_bundle(state.sampled, cfg.order)
    fields = {
        "H": b.H,
        "A0norm": b.A0_sq.with_values(np.sqrt(np.maximum(b.A0_sq.values, 0.0))),
        "area_factor": b.area_factor,
    }
    for name, f in fields.items():
        write_atomic(os.path.join(out, f"{name}.csv"), field_csv(f))
    doc = _manifest(
        cfg,
        status=trace.status,
        steps=len(trace.records) - 1,
        energy_initial=float(trace.records[0].energy),
        energy_final=float(trace.records[-1].energy),
        residual_initial=float(trace.records[0].residual_sup),
        residual_final=float(trace.records[-1].residual_sup),
        fields={k: _norms(v) for k, v in fields.items()},
    )
    write_atomic(os.path.join(out, "manifest.json"), _json_text(doc))
    if cfg.json:
        stdout.write(_json_text(doc))
    else:
        stdout.write(f"status={trace.status} steps={len(trace.records) - 1} energy {trace.records[0].energy!r} -> {trace.records[-1].energy!r}\n")
    return 0


COMMANDS = {"catalog": cmd_catalog, "analyze": cmd_analyze, "verify": cmd_verify, "umbilic": cmd_umbilic, "flow": cmd_flow}


# argument parsing ----------------------------------------------------------------
def _n_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n expects comma-separated integers, got {text!r}") from None
    return vals


def _param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"--param expects key=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k, json.loads(v)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"--param value for {k!r} is not valid JSON") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="willmore-umbilic", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, chart_required=True):
        if chart_required:
            sp.add_argument("chart", choices=sorted(CATALOG))
        sp.add_argument("--n", type=_n_list)
        sp.add_argument("--order", type=int, choices=(2, 4), default=2)
        sp.add_argument("--ambient", choices=AMBIENTS, default="euclidean")
        sp.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
        sp.add_argument("--out")
        sp.add_argument("--json", action="store_true")

    c = sub.add_parser("catalog", help="list catalog charts")
    c.add_argument("--json", action="store_true")
    common(sub.add_parser("analyze", help="dump first/second order fields"))
    v = sub.add_parser("verify", help="residual table for the identities")
    common(v)
    v.add_argument("--tolerances", metavar="FILE")
    u = sub.add_parser("umbilic", help="classify the umbilic set")
    u.add_argument("chart", nargs="?", choices=sorted(CATALOG))
    common(u, chart_required=False)
    u.add_argument("--synthetic", choices=sorted(SUITE))
    u.add_argument("--eps-rel", type=float, default=0.02)
    f = sub.add_parser("flow", help="Willmore gradient flow")
    f.add_argument("chart", nargs="?", choices=sorted(CATALOG), default="perturbed_sphere")
    common(f, chart_required=False)
    f.add_argument("--steps", type=int, default=200)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    sc = args.subcommand
    if sc == "catalog":
        return RunConfig("catalog", json=args.json).validate()
    if sc == "umbilic" and (args.chart is None) == (args.synthetic is None):
        raise UsageError("umbilic takes exactly one of CHART or --synthetic")
    params = dict(args.param)
    if len(params) != len(args.param):
        raise UsageError("repeated --param key")
    return RunConfig(
        subcommand=sc,
        chart=args.chart,
        params=params,
        ambient=args.ambient,
        n=args.n or tuple(DEFAULT_N[sc]),
        order=args.order,
        eps_rel=getattr(args, "eps_rel", 0.02),
        out=args.out,
        json=args.json,
        synthetic=getattr(args, "synthetic", None),
        steps=getattr(args, "steps", 200),
        tolerances=getattr(args, "tolerances", None),
    ).validate()


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.subcommand](cfg, stdout)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {e}\n")
        return 2
    except IsothermalityError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except (ValueError, ArithmeticError, RuntimeError) as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
