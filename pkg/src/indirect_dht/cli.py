"""Command-line entry point.

Exit codes: 0 success, 1 not found, 2 dangling host entry, 3 malformed
entry, 4 backend failure (unreachable gateway, aborted batch or migration,
failed experiment), 5 file I/O error, 64 usage error.
"""

from __future__ import annotations

import argparse
import base64
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

from indirect_dht import bench, cost_model
from indirect_dht.dht import DEFAULT_TTL, DEFAULT_WINDOW, LatencyModel, Record, SimulatedDht
from indirect_dht.entries import HostAddress, NetworkLocation
from indirect_dht.errors import (
    BackendError,
    DanglingHostError,
    EntryError,
    ExperimentError,
    MalformedEntryError,
    MigrationError,
    NotFoundError,
)
from indirect_dht.identifiers import decode_hex, generate_identifier
from indirect_dht.resolver import (
    format_profile,
    migrate,
    parse_profile,
    publish_direct,
    publish_host,
    publish_indirect,
    publish_profile,
    resolve,
)

EXIT_OK = 0
EXIT_NOT_FOUND = 1
EXIT_DANGLING = 2
EXIT_MALFORMED = 3
EXIT_BACKEND = 4
EXIT_IO = 5
EXIT_USAGE = 64

log = logging.getLogger("indirect_dht")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    d = bench.DEFAULT_LATENCY
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("backend")
    g.add_argument("--backend", default="simulated", help="'simulated' (default) or 'gateway:<host:port>'")
    g.add_argument("--state", type=Path, help="JSON file persisting the simulated table and clock between runs")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--ttl", type=float, default=DEFAULT_TTL, help="record TTL in seconds")
    g.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="max puts in flight")
    g.add_argument("--format", choices=("human", "csv"), default="human")
    lat = p.add_argument_group("latency model (ms)")
    lat.add_argument("--cg", type=float, default=d.c_g, help="per-get spacing")
    lat.add_argument("--cp", type=float, default=d.c_p, help="per-put spacing")
    lat.add_argument("--cr", type=float, default=d.c_r, help="get network latency")
    lat.add_argument("--cq", type=float, default=d.c_q, help="put network latency")
    lat.add_argument("--jitter", type=float, default=0.0, help="multiplicative noise half-width")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="indirect-dht", description="Resolve random resource identifiers through a DHT.",
                     epilog=__doc__.split("\n\n", 1)[1])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pub = sub.add_parser("publish", help="store an entry")
    pub_sub = pub.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    p = pub_sub.add_parser("direct", parents=[common])
    p.add_argument("--location", required=True, help="host:port/path")
    p.add_argument("--id")
    p = pub_sub.add_parser("indirect", parents=[common])
    p.add_argument("--host-id", required=True)
    p.add_argument("--path", required=True)
    p.add_argument("--id")
    p = pub_sub.add_parser("host", parents=[common])
    p.add_argument("--address", required=True, help="host:port")
    p.add_argument("--id")
    p = pub_sub.add_parser("profile", parents=[common], help="publish every entry listed in a profile file")
    p.add_argument("--profile", type=Path, required=True)

    p = sub.add_parser("resolve", parents=[common], help="resolve an identifier to host:port/path")
    p.add_argument("id")

    p = sub.add_parser("migrate", parents=[common], help="move a host to a new address")
    p.add_argument("--profile", type=Path, required=True)
    p.add_argument("--new-address", required=True)

    p = sub.add_parser("advance", parents=[common], help="move the simulated clock forward")
    p.add_argument("seconds", type=float)

    p = sub.add_parser("advise", parents=[common], help="direct or indirect entries?")
    p.add_argument("--n", type=int, default=1, help="resources on the host")
    p.add_argument("--rl", type=float, default=1.0, help="lookups per unit time")
    p.add_argument("--rm", type=float, default=1.0, help="migrations per unit time")
    p.add_argument("--wl", type=float, default=1.0, help="weight on lookup time")
    p.add_argument("--wm", type=float, default=1.0, help="weight on migration time")

    gw = sub.add_parser("gateway", help="run the TCP gateway")
    gw_sub = gw.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = gw_sub.add_parser("serve")
    p.add_argument("--listen", default="127.0.0.1:4711")
    p.add_argument("--max-conn", type=int, default=128)
    p.add_argument("-v", "--verbose", action="store_true")

    b = sub.add_parser("bench", help="run an experiment and write CSV")
    b_sub = b.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    for name in ("lookup", "migration"):
        p = b_sub.add_parser(name, parents=[common])
        p.add_argument("--out", required=True, help="CSV destination, '-' for stdout")
        p.add_argument("--entries", type=int, default=5000)
        p.add_argument("--lookups", type=int, default=2000)
        p.add_argument("--trials", type=int, default=100, help="migrations per sweep point")
        p.add_argument("--sweep", help="comma-separated resource counts")
    return parser


def _latency(args) -> LatencyModel:
    try:
        return LatencyModel(args.cg, args.cp, args.cr, args.cq, args.jitter, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _ident(text):
    try:
        return decode_hex(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse(kind, text):
    try:
        return kind.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_state(backend: SimulatedDht, path: Path) -> None:
    data = json.loads(path.read_text())
    backend.advance(data["clock_ms"])
    backend.load({
        decode_hex(k): [Record(base64.b64decode(v), t, ttl) for v, t, ttl in recs]
        for k, recs in data["records"].items()
    })


def _save_state(backend: SimulatedDht, path: Path) -> None:
    records = {
        k.hex(): [[base64.b64encode(r.value).decode("ascii"), r.inserted_at, r.ttl] for r in recs]
        for k, recs in backend.dump().items()
    }
    path.write_text(json.dumps({"clock_ms": backend.now(), "records": records}, indent=1) + "\n")


@contextmanager
def open_backend(args):
    if bench.backend_kind(args.backend) == "gateway":
        from indirect_dht.gateway import GatewayClient

        if args.state:
            raise UsageError("--state only applies to the simulated backend")
        client = GatewayClient(_parse(HostAddress, args.backend[len("gateway:"):]), args.window)
        try:
            yield client
        finally:
            client.close()
        return
    backend = SimulatedDht(_latency(args))
    if args.state and args.state.exists():
        _load_state(backend, args.state)
    yield backend
    if args.state:
        _save_state(backend, args.state)


def cmd_publish(args) -> int:
    if args.kind == "profile":
        profile = parse_profile(args.profile.read_text())
        with open_backend(args) as backend:
            elapsed = publish_profile(backend, profile, args.ttl, args.window)
        print(f"published {len(profile.resources)} resources ({profile.strategy.value}) in {elapsed!r} ms")
        return EXIT_OK
    ident = _ident(args.id) if args.id else generate_identifier()
    with open_backend(args) as backend:
        if args.kind == "direct":
            publish_direct(backend, ident, _parse(NetworkLocation, args.location), args.ttl)
        elif args.kind == "indirect":
            publish_indirect(backend, ident, _ident(args.host_id), args.path, args.ttl)
        else:
            publish_host(backend, ident, _parse(HostAddress, args.address), args.ttl)
    print(ident.hex())
    return EXIT_OK


def cmd_resolve(args) -> int:
    ident = _ident(args.id)
    with open_backend(args) as backend:
        try:
            loc = resolve(backend, ident)
        except NotFoundError:
            print("not found", file=sys.stderr)
            return EXIT_NOT_FOUND
        except DanglingHostError as exc:
            print(f"dangling host: {exc}", file=sys.stderr)
            return EXIT_DANGLING
        except MalformedEntryError as exc:
            print(f"malformed entry: {exc}", file=sys.stderr)
            return EXIT_MALFORMED
    print(loc)
    return EXIT_OK


def cmd_migrate(args) -> int:
    profile = parse_profile(args.profile.read_text())
    new_address = _parse(HostAddress, args.new_address)
    with open_backend(args) as backend:
        try:
            result = migrate(backend, profile, new_address, args.ttl, args.window)
        except MigrationError as exc:
            print(f"migration failed: completed {exc.completed}/{exc.total}: {exc.cause}", file=sys.stderr)
            return EXIT_BACKEND
    args.profile.write_text(format_profile(profile))
    if args.format == "csv":
        print("elapsed_ms,ops_issued")
        print(f"{result.elapsed!r},{result.ops_issued}")
    else:
        print(f"elapsed_ms={result.elapsed!r} ops_issued={result.ops_issued}")
    return EXIT_OK


def cmd_advance(args) -> int:
    with open_backend(args) as backend:
        if args.seconds < 0:
            raise UsageError("cannot move the clock backwards")
        now = backend.advance(args.seconds * 1000.0)
    print(f"now_ms={now!r}")
    return EXIT_OK


def advise_params(args) -> cost_model.CostParams:
    try:
        return cost_model.CostParams(c_g=args.cg, c_p=args.cp, c_r=args.cr, c_q=args.cq,
                                     n=args.n, r_l=args.rl, r_m=args.rm, w_l=args.wl, w_m=args.wm)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_advise(args) -> int:
    report = cost_model.recommend(advise_params(args))
    fields = [
        ("lhs", report.lhs),
        ("rhs", report.rhs),
        ("migration_direct", report.migration_direct),
        ("migration_indirect", report.migration_indirect),
        ("lookup_direct", report.lookup_direct),
        ("lookup_indirect", report.lookup_indirect),
        ("C_d", report.overall_direct),
        ("C_i", report.overall_indirect),
        ("C_d_weighted", report.weighted_direct),
        ("C_i_weighted", report.weighted_indirect),
    ]
    verdict = report.recommendation.value
    if args.format == "csv":
        print(",".join(k for k, _ in fields) + ",recommendation")
        print(",".join(repr(v) for _, v in fields) + f",{verdict}")
        return EXIT_OK
    print(f"(w_l/w_m)*(r_l/r_m) = {report.lhs:.6g}   (n-1)*c_p/(c_g+c_r) = {report.rhs:.6g}")
    for k, v in fields[2:]:
        print(f"{k:20s} {v:.6g}")
    if report.recommendation is cost_model.Recommendation.TIE:
        print("recommendation: tie (use direct: one fewer lookup hop)")
    else:
        print(f"recommendation: {verdict}")
    return EXIT_OK


def cmd_gateway(args) -> int:
    from indirect_dht.gateway import GatewayConfig, serve

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.max_conn < 1:
        raise UsageError("--max-conn must be positive")
    serve(GatewayConfig(listen=_parse(HostAddress, args.listen), max_connections=args.max_conn))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        sweep = [int(x) for x in args.sweep.split(",")] if args.sweep else list(bench.DEFAULT_SWEEP)
        spec = bench.ExperimentSpec(
            backend=args.backend, latency=_latency(args), entry_count=args.entries,
            lookup_trials=args.lookups, migration_trials=args.trials, resource_sweep=sweep,
            window=args.window, seed=args.seed, ttl=args.ttl,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    failed = 0
    if args.experiment == "lookup":
        rows = bench.lookup_rows(spec, bench.run_lookup_experiment(spec))
    else:
        table = bench.run_migration_experiment(spec)
        failed = sum(len(r.failures) for r in table)
        if failed:
            print(f"{failed} migrations failed", file=sys.stderr)
        rows = bench.migration_rows(spec, table)
    if args.out == "-":
        bench.emit_csv(rows, sys.stdout)
    else:
        bench.emit_csv(rows, args.out)
    return EXIT_BACKEND if failed else EXIT_OK


COMMANDS = {
    "publish": cmd_publish,
    "resolve": cmd_resolve,
    "migrate": cmd_migrate,
    "advance": cmd_advance,
    "advise": cmd_advise,
    "gateway": cmd_gateway,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"indirect-dht: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MigrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except ExperimentError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (BackendError, OSError) as exc:
        if isinstance(exc, OSError) and not isinstance(exc, ConnectionError):
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (EntryError, ValueError) as exc:
        print(f"indirect-dht: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
