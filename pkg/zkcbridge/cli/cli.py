"""
Command-line front door.

Usage:
    zkcbridge decode-vaa --hex <vaa hex>
    zkcbridge encode-vaa --json <file or JSON text>
    zkcbridge decode-receipt --hex <receipt hex>
    zkcbridge encode-receipt --json <file or JSON text>
    zkcbridge gen-vectors [--out <file>]
    zkcbridge verify-vectors [--file <file>]
    zkcbridge run --scenario <file or catalog name> [--seed <n>] [--out <file>] [--timestamps]
    zkcbridge check --trace <file>
    zkcbridge campaign [--seeds <n>] [--start <n>] [--workers <n>]
    zkcbridge plot --trace <file> --out <html> [--network]

Byte arguments are hex, with or without a 0x prefix; hex in output is always 0x-prefixed. Exit codes: 0 on
success, 1 when a decode, verification or property check fails, 2 for usage errors.
"""

__all__ = ["cli_main", "main"]

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

from .. import graphing, plotting
from ..codec import (
    decode_receipt,
    decode_vaa,
    encode_receipt,
    encode_vaa,
    receipt_from_dict,
    receipt_to_dict,
    vaa_from_dict,
    vaa_to_dict,
)
from ..errors import BridgeError
from ..sim import (
    InvalidScenario,
    ScenarioSpec,
    TraceReport,
    catalog_scenario,
    check_properties,
    run_campaign,
    run_scenario,
)
from ..vectors import GOLDEN_VECTORS_PATH, generate_vectors, load_vectors, verify_vectors

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True)


def _hex_argument(text: str) -> bytes:
    try:
        return bytes.fromhex(text.strip().removeprefix("0x"))
    except ValueError as exc:
        raise UsageError(f"Not hex: {text!r}") from exc


def _json_argument(text: str):
    if not text.lstrip().startswith(("{", "[")):
        try:
            text = Path(text).read_text()
        except OSError as exc:
            raise UsageError(f"Cannot read {text}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"Invalid JSON: {exc}") from exc


def _write(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        logger.info(f"Wrote {out}")


def _load_scenario(name: str) -> ScenarioSpec:
    if Path(name).is_file():
        return ScenarioSpec.from_json(Path(name))
    return catalog_scenario(name)


def _load_trace(path: Path) -> TraceReport:
    try:
        return TraceReport.from_jsonl(path.read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"Cannot read trace {path}: {exc}") from exc


def _decode_vaa(args) -> int:
    print(_dump(vaa_to_dict(decode_vaa(_hex_argument(args.hex)))))
    return EXIT_OK


def _encode_vaa(args) -> int:
    try:
        vaa = vaa_from_dict(_json_argument(args.json))
    except BridgeError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"Incomplete VAA description: {exc}") from exc
    print("0x" + encode_vaa(vaa).hex())
    return EXIT_OK


def _decode_receipt(args) -> int:
    print(_dump(receipt_to_dict(decode_receipt(_hex_argument(args.hex)))))
    return EXIT_OK


def _encode_receipt(args) -> int:
    try:
        receipt = receipt_from_dict(_json_argument(args.json))
    except BridgeError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"Incomplete receipt description: {exc}") from exc
    print("0x" + encode_receipt(receipt).hex())
    return EXIT_OK


def _gen_vectors(args) -> int:
    _write(json.dumps(generate_vectors(), indent=2) + "\n", args.out)
    return EXIT_OK


def _verify_vectors(args) -> int:
    try:
        vectors = load_vectors(args.file)
    except (OSError, ValueError) as exc:
        raise UsageError(f"Cannot read vectors {args.file}: {exc}") from exc
    mismatches = verify_vectors(vectors)
    for mismatch in mismatches:
        print(_dump(mismatch), file=sys.stderr)
    print(f"{len(vectors) - len(mismatches)}/{len(vectors)} vectors match")
    return EXIT_FAILED if mismatches else EXIT_OK


def _run(args) -> int:
    report = run_scenario(_load_scenario(args.scenario), args.seed)
    if args.timestamps:
        report.header["generated_at"] = datetime.now(timezone.utc).isoformat()
    _write(report.to_jsonl(), args.out)
    return EXIT_OK


def _check(args) -> int:
    verdicts = check_properties(_load_trace(args.trace))
    print(_dump(verdicts.to_dict()))
    for verdict in verdicts:
        suffix = " (legacy path only)" if verdict.legacy_only else ""
        print(f"{verdict.name}: {verdict.status.value}{suffix}", file=sys.stderr)
    return EXIT_OK if verdicts.ok else EXIT_FAILED


def _campaign(args) -> int:
    report = run_campaign(range(args.start, args.start + args.seeds), workers=args.workers)
    print(_dump(report.to_dict()))
    return EXIT_OK if report.ok else EXIT_FAILED


def _plot(args) -> int:
    trace = _load_trace(args.trace)
    G = graphing.flow_graph(trace)
    if args.network:
        heading = str(trace.header.get("scenario", ""))
        plotting.visualise_network(G, filename=str(args.out), heading=heading)
    else:
        plotting.generate_sankey(G).write_html(str(args.out))
    logger.info(f"Wrote {args.out}")
    return EXIT_OK


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="zkcbridge",
        description="Simulator and codec tools for the Solana to Aztec bridge.",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level for messages on stderr.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("decode-vaa", help="Render a wire-encoded VAA as JSON.")
    p.add_argument("--hex", required=True)
    p.set_defaults(handler=_decode_vaa)

    p = sub.add_parser("encode-vaa", help="Encode a JSON VAA description.")
    p.add_argument("--json", required=True, help="File or JSON text in decode-vaa's format.")
    p.set_defaults(handler=_encode_vaa)

    p = sub.add_parser("decode-receipt", help="Render a receipt payload as JSON.")
    p.add_argument("--hex", required=True)
    p.set_defaults(handler=_decode_receipt)

    p = sub.add_parser("encode-receipt", help="Encode a JSON receipt description.")
    p.add_argument("--json", required=True, help="File or JSON text in decode-receipt's format.")
    p.set_defaults(handler=_encode_receipt)

    p = sub.add_parser("gen-vectors", help="Compute the golden vectors.")
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=_gen_vectors)

    p = sub.add_parser("verify-vectors", help="Recompute a golden vector file.")
    p.add_argument("--file", type=Path, default=GOLDEN_VECTORS_PATH)
    p.set_defaults(handler=_verify_vectors)

    p = sub.add_parser("run", help="Run a scenario and write its trace as JSON lines.")
    p.add_argument("--scenario", required=True, help="Scenario JSON file or catalog name.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.add_argument("--timestamps", action="store_true", help="Add the wall-clock time to the header.")
    p.set_defaults(handler=_run)

    p = sub.add_parser("check", help="Check every property on a trace.")
    p.add_argument("--trace", type=Path, required=True)
    p.set_defaults(handler=_check)

    p = sub.add_parser("campaign", help="Run the adversarial family over many seeds.")
    p.add_argument("--seeds", type=int, default=1000)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=_campaign)

    p = sub.add_parser("plot", help="Render a trace's message flow as HTML.")
    p.add_argument("--trace", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--network", action="store_true", help="Network view instead of a Sankey diagram.")
    p.set_defaults(handler=_plot)

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        parser.exit(EXIT_USAGE)
    return args


def cli_main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv (Optional[List[str]], optional): Arguments without the program name. Defaults to sys.argv[1:].

    Returns:
        int: 0 on success, 1 on a failed decode, verification or check, 2 on a usage error.
    """
    try:
        args = _parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=args.log_level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except (UsageError, InvalidScenario) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BridgeError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_FAILED


def main() -> None:
    sys.exit(cli_main())
