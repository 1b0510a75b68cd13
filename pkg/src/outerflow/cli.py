"""Command-line entry point.  Exit codes: 0 ok, 1 violated or infeasible,
2 usage or input error.  Reports go to stdout, diagnostics to stderr."""
from __future__ import annotations

import functools
import logging
import sys

import click

from .driver import GenParams, InvalidParams, gen_instance, gen_ring, oracle_unsplittable, solve, verify
from .fracflow import Infeasible, solve_fractional
from .formats import (
    ParseError,
    emit_routing,
    format_instance,
    format_ring,
    format_ring_routing,
    parse_instance,
    parse_ring,
    parse_routing,
)
from .geometry import GeometryError
from .instance import (
    CutConditionViolated,
    InstanceError,
    TooLarge,
    as_fraction,
    brute_cut_condition,
    check_cut_condition,
    collapse_parallel,
)
from .pinning import run_pinning
from .ringload import BACKENDS, check_ring_cut, enumerate_ring

BACKEND = click.option("--backend", type=click.Choice(sorted(BACKENDS)), default="exact",
                       show_default=True, help="Ring-loading backend.")


class Violated(Exception):
    """Result is a negative verdict (exit code 1)."""


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Violated as exc:
            if str(exc):
                click.echo(str(exc), err=True)
            sys.exit(1)
        except (CutConditionViolated, Infeasible, TooLarge) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except (ParseError, GeometryError, InstanceError, InvalidParams) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    return wrapper


def _rational(ctx, param, value):
    if value is None:
        return None
    try:
        return as_fraction(value)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"not a rational number: {value!r}") from None


def _write(out, text: str) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write(text)


def _load(fh):
    return parse_instance(fh.read())


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging on stderr.")
@click.version_option(package_name="artifact")
def main(verbose: bool) -> None:
    """Unsplittable flows on outerplanar graphs under the cut condition."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        stream=sys.stderr, format="%(name)s: %(message)s")


@main.command()
@click.argument("instance", type=click.File("r"))
@click.option("--brute", is_flag=True, help="Also check every vertex subset.")
@_guard
def check(instance, brute):
    """Check the cut condition over all vertex intervals."""
    simple, _ = collapse_parallel(_load(instance))
    rep = check_cut_condition(simple)
    if brute:
        other = brute_cut_condition(simple)
        if other.holds != rep.holds:
            raise RuntimeError("interval and subset checks disagree")
    if rep.holds:
        click.echo(f"holds tight {len(rep.tight_cuts)}")
        return
    click.echo(f"violated {rep.witness} slack {rep.slack}")
    raise Violated()


@main.command()
@click.argument("instance", type=click.File("r"))
@_guard
def fractional(instance):
    """Solve the fractional multicommodity flow LP."""
    simple, _ = collapse_parallel(_load(instance))
    try:
        flow = solve_fractional(simple)
    except Infeasible as exc:
        witness = exc.report.witness if exc.report else None
        click.echo(f"infeasible excess {exc.excess:.9g} witness {witness}")
        raise Violated() from None
    for gid in sorted(flow.paths):
        for path, val in flow.paths[gid]:
            click.echo(f"x {gid} {val:.9g} " + " ".join(map(str, path)))
    loads = flow.loads()
    for e in simple.graph.edges:
        click.echo(f"load {e[0]} {e[1]} {loads.get(e, 0.0):.9g} {simple.caps[e]}")


@main.command("solve")
@click.argument("instance", type=click.File("r"))
@BACKEND
@click.option("-o", "--output", type=click.File("w"), help="Write the routing here.")
@_guard
def solve_cmd(instance, backend, output):
    """Route every demand on one path within (2a+1)*d_max of capacity."""
    res = solve(_load(instance), backend)
    _write(output, emit_routing(res.routing, res.violation, res.bound))


@main.command("ring-solve")
@click.argument("ring", type=click.File("r"))
@click.option("--backend", type=click.Choice(sorted(BACKENDS) + ["enum"]), default="exact",
              show_default=True)
@_guard
def ring_solve(ring, backend):
    """Solve a standalone ring-loading instance."""
    inst = parse_ring(ring.read())
    rep = check_ring_cut(inst)
    if not rep.holds:
        click.echo(f"violated {rep.witness} slack {rep.slack}")
        raise Violated()
    if backend == "enum":
        routing, viol = enumerate_ring(inst)
    else:
        routing, viol = BACKENDS[backend].solve(inst)
    click.echo(format_ring_routing(inst, routing, viol), nl=False)


@main.command("verify")
@click.argument("instance", type=click.File("r"))
@click.argument("routing", type=click.File("r"))
@click.option("--multiplier", callback=_rational, default="18/5", show_default=True,
              help="Allowed excess as a multiple of d_max.")
@_guard
def verify_cmd(instance, routing, multiplier):
    """Check a routing file against an instance."""
    inst = _load(instance)
    parsed, _, _ = parse_routing(routing.read(), inst)
    rep = verify(inst, parsed, multiplier)
    if rep.ok:
        click.echo(f"ok violation {rep.violation} bound {rep.bound}")
        return
    for line in rep.failures:
        click.echo(f"fail {line}")
    raise Violated()


@main.command()
@click.argument("instance", type=click.File("r"))
@click.option("-o", "--output", type=click.File("w"))
@_guard
def oracle(instance, output):
    """Exhaustive minimum-violation unsplittable routing (small inputs)."""
    viol, routing = oracle_unsplittable(_load(instance))
    _write(output, emit_routing(routing, viol))


@main.command()
@click.option("--n", "n", type=int, required=True, help="Number of vertices.")
@click.option("--chords", type=int, default=0, show_default=True)
@click.option("--demands", type=int, default=0, show_default=True)
@click.option("--slack", callback=_rational, default=None,
              help="Added to every capacity (default: d_max/4).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--ring", is_flag=True, help="Emit a ring-loading instance instead (chords ignored).")
@click.option("-o", "--output", type=click.File("w"))
@_guard
def gen(n, chords, demands, slack, seed, ring, output):
    """Generate a random instance satisfying the cut condition."""
    if ring:
        _write(output, format_ring(gen_ring(n, demands, seed, slack or 0), f"seed {seed}"))
        return
    inst = gen_instance(GenParams(n, chords, demands, slack, seed))
    _write(output, format_instance(inst, f"seed {seed}"))


@main.command()
@click.argument("instance", type=click.File("r"))
@BACKEND
@_guard
def trace(instance, backend):
    """Per-iteration log of the pinning phase."""
    simple, _ = collapse_parallel(_load(instance))
    out = run_pinning(simple, backend)
    for rec in out.trace:
        click.echo(rec.line())
    click.echo(f"iterations {out.iterations} alpha {out.alpha} d_max {out.d_max}")


if __name__ == "__main__":  # pragma: no cover
    main()
