"""Command-line entry point: ``python -m corrdyn.cli <subcommand> [flags]``.

Flags override a ``key=value`` config file given with ``--config``.  Every CSV
starts with the effective configuration as ``# key=value`` comment lines.
Exit codes: 0 success, 2 usage error, 1 computational failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import ParameterError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    action: str = ""
    a: complex = 4 + 0j
    z: str = "0"
    n: int = 1
    direction: str = "backward"
    method: str = "resultant"
    side: str = "minus"
    n_max: int = 500
    pixels: int = 512
    center: str = ""
    width: float = 0.0
    supersample: bool = False
    pgm: bool = False
    samples: int = 10_000
    seed: int = 0
    coalesce_eps: float = -1.0        # negative = automatic
    threads: int = 0                  # 0 = all available cores
    out: str = ""
    input: str = ""
    other: str = ""
    dump_poly: str = ""

    def header(self) -> list[str]:
        """Effective configuration as key=value strings, for CSV headers."""
        skip = {"threads", "out", "dump_poly"}
        out = []
        for f in dataclasses.fields(self):
            if f.name in skip:
                continue
            v = getattr(self, f.name)
            if f.name == "a":
                v = f"{v.real!r},{v.imag!r}"
            out.append(f"{f.name}={v}")
        return out


# -- parsing ---------------------------------------------------------------------------------

def parse_a(tokens) -> complex:
    """One complex string ('3+2i', '4') or two reals ('3', '2')."""
    if isinstance(tokens, (int, float, complex)):
        a = complex(tokens)
    else:
        if isinstance(tokens, str):
            tokens = tokens.replace(",", " ").split()
        tokens = list(tokens)
        try:
            if len(tokens) == 1:
                a = complex(tokens[0].replace(" ", "").replace("i", "j"))
            elif len(tokens) == 2:
                a = complex(float(tokens[0]), float(tokens[1]))
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"--a expects one complex or two reals, got {' '.join(map(str, tokens))!r}")
    if a == 1:
        raise UsageError("a = 1 is degenerate")
    return a


def read_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    for i, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


_BOOL = {"supersample", "pgm"}


def _coerce(name: str, value):
    kinds = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    if name not in kinds:
        raise UsageError(f"unknown config key {name!r}")
    if name == "a":
        return parse_a(value)
    if not isinstance(value, str):
        return value
    kind = kinds[name]
    try:
        if name in _BOOL:
            return value.lower() in ("1", "true", "yes", "on")
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise UsageError(f"bad value for {name}: {value!r}")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a", nargs="+", default=S, help="parameter: complex string or two reals (default 4)")
    common.add_argument("--config", default=S, help="key=value file; flags take precedence")
    common.add_argument("--threads", type=int, default=S, help="cap on internal parallelism")
    common.add_argument("--out", default=S, help="output file (CSV or image)")

    p = _Parser(prog="corrdyn", description="Dynamics of the correspondences F_a = J_a o Cov.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("cov", "print the two Cov images of z")
    s.add_argument("--z", default=S)
    for name in ("forward", "backward"):
        s = add(name, f"{name} images of z, or the n-step orbit measure as CSV")
        s.add_argument("--z", default=S)
        s.add_argument("--n", type=int, default=S)

    m = add("measure", "transport and compare atomic measures")
    m.add_argument("action", choices=["evolve", "compare", "residual"])
    m.add_argument("--z", default=S)
    m.add_argument("--n", type=int, default=S)
    m.add_argument("--direction", choices=["forward", "backward"], default=S)
    m.add_argument("--coalesce-eps", dest="coalesce_eps", type=float, default=S)
    m.add_argument("--input", default=S, help="atom CSV")
    m.add_argument("--other", default=S, help="second atom CSV for compare")

    s = add("limitset", "escape-time image of a limit set")
    s.add_argument("--side", choices=["minus", "plus"], default=S)
    s.add_argument("--n-max", dest="n_max", type=int, default=S)
    s.add_argument("--pixels", type=int, default=S)
    s.add_argument("--center", default=S)
    s.add_argument("--width", type=float, default=S)
    s.add_argument("--supersample", action="store_true", default=S)
    s.add_argument("--pgm", action="store_true", default=S)

    s = add("periodic", "periodic points of period n with multiplicities")
    s.add_argument("--n", type=int, default=S)
    s.add_argument("--method", choices=["resultant", "newton", "both"], default=S)
    s.add_argument("--dump-poly", dest="dump_poly", default=S, help="write the n-step graph polynomial")

    s = add("superstable", "parameters whose critical point -1 has period dividing n")
    s.add_argument("--n", type=int, default=S)

    s = add("klein", "Klein-pair validation")
    s.add_argument("action", choices=["validate"])
    s.add_argument("--samples", type=int, default=S)
    s.add_argument("--seed", type=int, default=S)

    add("critical", "print the ramification data")
    add("check", "run the invariant suite")
    return p


def make_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    if not ns.get("command"):
        raise UsageError("a subcommand is required")
    values = {}
    if "config" in ns:
        values.update(read_config(ns.pop("config")))
    values.update(ns)
    cfg = RunConfig()
    for k, v in values.items():
        setattr(cfg, k, _coerce(k, v))
    return cfg


# -- helpers ------------------------------------------------------------------------------------

def _check_writable(path: str):
    if not path:
        return
    p = Path(path)
    if p.is_dir():
        raise UsageError(f"output path {path} is a directory")
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise UsageError(f"output directory {parent} is not writable")


def _emit(cfg: RunConfig, text: str):
    """Write machine-readable text to --out, or to stdout when no file is given."""
    if cfg.out:
        Path(cfg.out).write_text(text)
        print(f"wrote {cfg.out}")
    else:
        sys.stdout.write(text)


def _ctx(cfg):
    from .corr import make_context
    try:
        return make_context(cfg.a)
    except ParameterError as exc:
        raise UsageError(str(exc))


def _klein_ctx(cfg):
    from .klein import check_supported
    from .errors import UnsupportedParameterError
    try:
        check_supported(cfg.a)
    except (UnsupportedParameterError, ParameterError) as exc:
        raise UsageError(str(exc))
    return _ctx(cfg)


def _point(text):
    from .sphere import SpherePoint
    try:
        return SpherePoint.parse(str(text))
    except ValueError:
        raise UsageError(f"cannot read point {text!r}")


def _set_threads(n: int):
    """Pin numba's pool before it is first imported; later calls only clip."""
    if n <= 0:
        return
    if "numba" not in sys.modules:
        os.environ["NUMBA_NUM_THREADS"] = str(n)
    else:
        from .render import set_threads
        set_threads(n)


# -- subcommands ------------------------------------------------------------------------------

def cmd_cov(cfg):
    from .corr import cov_images
    for p, m in cov_images(_point(cfg.z)):
        print(f"{p} x{m}")


def cmd_images(cfg):
    from .corr import images, orbit_tree
    ctx = _ctx(cfg)
    z = _point(cfg.z)
    if cfg.n == 1 and not cfg.out:
        for p, m in images(ctx, z, cfg.command):
            print(f"{p} weight={m / 2:g}")
        return
    mu = orbit_tree(ctx, z, cfg.n, cfg.command)
    _emit(cfg, mu.to_csv(comments=cfg.header()))


def cmd_measure(cfg):
    from .atoms import AtomicMeasure
    from .measure import discrepancy, invariance_residual, transport
    ctx = _ctx(cfg)
    if cfg.action == "evolve":
        eps = None if cfg.coalesce_eps < 0 else cfg.coalesce_eps
        mu = AtomicMeasure.from_csv(cfg.input) if cfg.input else AtomicMeasure.dirac(_point(cfg.z))
        mu = transport(ctx, mu, cfg.n, cfg.direction, coalesce_eps=eps)
        _emit(cfg, mu.to_csv(comments=cfg.header()))
        print(f"atoms={len(mu)} mass={mu.mass!r}", file=sys.stderr if not cfg.out else sys.stdout)
    elif cfg.action == "compare":
        if not (cfg.input and cfg.other):
            raise UsageError("measure compare needs --input and --other")
        print(f"{discrepancy(AtomicMeasure.from_csv(cfg.input), AtomicMeasure.from_csv(cfg.other)):.12g}")
    else:
        if not cfg.input:
            raise UsageError("measure residual needs --input")
        print(f"{invariance_residual(ctx, AtomicMeasure.from_csv(cfg.input), cfg.direction):.12g}")


def cmd_limitset(cfg):
    from . import render
    ctx = _klein_ctx(cfg)
    if not cfg.out:
        raise UsageError("limitset needs --out")
    vp = render.default_viewport(cfg.a, cfg.pixels)
    if cfg.center or cfg.width:
        c = _point(cfg.center).value if cfg.center else vp.center
        vp = render.Viewport(c, cfg.width or vp.width, cfg.pixels, cfg.pixels)
    grid = render.render_limit_set(ctx, cfg.side, vp, cfg.n_max, cfg.supersample)
    (render.write_pgm if cfg.pgm else render.write_ppm)(grid, cfg.out)
    print(f"wrote {cfg.out} {vp.pixels_x}x{vp.pixels_y} inside={int(grid.inside.sum())} "
          f"slow={grid.notes['slow']} inconsistent={grid.notes['inconsistent']} "
          f"threads={render.numba.get_num_threads()}")


def cmd_periodic(cfg):
    from .periodic import graph_iterate, periodic_points
    ctx = _ctx(cfg)
    if cfg.dump_poly:
        graph_iterate(ctx, cfg.n).dump(cfg.dump_poly)
        print(f"wrote {cfg.dump_poly}")
    rep = periodic_points(ctx, cfg.n, cfg.method)
    _emit(cfg, rep.to_csv(comments=cfg.header() + [f"note={s}" for s in rep.notes]))
    print(f"total_multiplicity={rep.total_multiplicity} distinct={rep.count_distinct} "
          f"verified={rep.all_verified}", file=sys.stderr if not cfg.out else sys.stdout)


def cmd_superstable(cfg):
    from .periodic import superstable_parameters
    found = superstable_parameters(cfg.n)
    lines = [f"# {c}" for c in cfg.header()] + ["re,im,residual,critical_verified"]
    lines += [f"{p.a.real:.17g},{p.a.imag:.17g},{p.residual:.3e},{int(p.verified_critical)}" for p in found]
    _emit(cfg, "\n".join(lines) + "\n")


def cmd_klein(cfg):
    from .klein import validate_klein
    rep = validate_klein(_klein_ctx(cfg), cfg.samples, cfg.seed)
    print(rep.text())
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_critical(cfg):
    from .corr import critical_data
    cd = critical_data(_ctx(cfg))
    for name in ("A1", "A2"):
        print(f"{name}: " + "; ".join(f"({p}) -> ({q})" for p, q in getattr(cd, name)))
    for name in ("B1", "B2"):
        print(f"{name}: " + "; ".join(f"({p})" for p in getattr(cd, name)))


def cmd_check(cfg):
    from .checks import run_all
    results = run_all(_ctx(cfg))
    for r in results:
        print(r.line())
    return EXIT_FAIL if any(r.passed is False for r in results) else EXIT_OK


COMMANDS = {
    "cov": cmd_cov, "forward": cmd_images, "backward": cmd_images, "measure": cmd_measure,
    "limitset": cmd_limitset, "periodic": cmd_periodic, "superstable": cmd_superstable,
    "klein": cmd_klein, "critical": cmd_critical, "check": cmd_check,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = make_config(argv)
        for path in (cfg.out, cfg.dump_poly):
            _check_writable(path)
        _set_threads(cfg.threads)
        code = COMMANDS[cfg.command](cfg)
        return EXIT_OK if code is None else code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:          # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
