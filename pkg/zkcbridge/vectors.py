"""
Golden vectors.

Byte-exact expected outputs for the hashing, field and codec operations, so an independent implementation
(or a future refactor of this one) can be checked against them. A vector is a JSON object:

    {"op": "domain_tag", "inputs": {"emitter_chain": 1, "emitter_address": "00..01", "sequence": 0},
     "output": "0x..."}

Byte inputs are lowercase hex without a 0x prefix, integers are JSON integers and the output is 0x-prefixed
hex. The vectors shipped in `zkcbridge/data/golden_vectors.json` were produced by a separate Keccak
implementation, not by this package.
"""

__all__ = [
    "GOLDEN_VECTORS_PATH",
    "VECTOR_OPERATIONS",
    "generate_vectors",
    "verify_vectors",
    "load_vectors",
]

import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List

from .codec import (
    BoundPayload,
    encode_bound_payload,
    encode_receipt,
    encode_vaa,
    receipt_from_dict,
    vaa_body_hash,
    vaa_from_dict,
)
from .crypto import (
    BN254_R,
    commitment,
    domain_tag,
    field_to_bytes,
    keccak256,
    secret_hash,
    signing_digest,
    to_field,
)
from .origin import DEFAULT_EMITTER
from .portal import DEFAULT_L2_INSTANCE, aztec_key

logger = logging.getLogger(__name__)

GOLDEN_VECTORS_PATH = Path(__file__).parent / "data" / "golden_vectors.json"


def _b(text: str) -> bytes:
    return bytes.fromhex(text.removeprefix("0x"))


def _vaa(inputs: Dict[str, Any]):
    return vaa_from_dict({"signatures": [], **inputs})


VECTOR_OPERATIONS: Dict[str, Callable[[Dict[str, Any]], bytes]] = {
    "keccak256": lambda i: keccak256(_b(i["data"])),
    "to_field": lambda i: field_to_bytes(to_field(_b(i["d"]))),
    "domain_tag": lambda i: domain_tag(
        i["emitter_chain"], _b(i["emitter_address"]), i["sequence"]
    ),
    "commitment": lambda i: field_to_bytes(commitment(_b(i["dom"]), _b(i["m"]))),
    "secret_hash": lambda i: secret_hash(i["s"]),
    "signing_digest": lambda i: signing_digest(_b(i["h"])),
    "encode_bound_payload": lambda i: encode_bound_payload(
        BoundPayload(_b(i["secret_hash"]), _b(i["m"]))
    ),
    "encode_receipt": lambda i: encode_receipt(receipt_from_dict(i)),
    "aztec_key": lambda i: aztec_key(
        _b(i["l2_instance"]),
        i["rollup_version"],
        int.from_bytes(_b(i["c"]), "big"),
        _b(i["secret_hash"]),
        i["leaf_index"],
    ),
    "encode_vaa": lambda i: encode_vaa(_vaa(i)),
    "vaa_body_hash": lambda i: vaa_body_hash(_vaa(i).body),
}


def _vector_inputs() -> List[Dict[str, Any]]:
    emitter1 = "00" * 31 + "01"
    default_emitter = DEFAULT_EMITTER.hex()
    inputs = [("keccak256", {"data": d}) for d in ("", "616263", "61" * 200)]
    inputs += [
        ("to_field", {"d": field.to_bytes(32, "big").hex()})
        for field in (0, BN254_R - 1, BN254_R, BN254_R + 1, 2**256 - 1)
    ]
    inputs += [
        ("domain_tag", {"emitter_chain": chain, "emitter_address": emitter, "sequence": sequence})
        for chain, emitter, sequence in (
            (1, emitter1, 0),
            (1, default_emitter, 5),
            (0xFFFF, "ff" * 32, 2**64 - 1),
        )
    ]
    dom = domain_tag(1, bytes.fromhex(emitter1), 0).hex()
    inputs += [("commitment", {"dom": dom, "m": m}) for m in ("68656c6c6f", "")]
    inputs += [("secret_hash", {"s": s}) for s in (0, 1, 42, BN254_R - 1)]
    inputs.append(("signing_digest", {"h": keccak256(b"abc").hex()}))

    sh42 = secret_hash(42).hex()
    inputs.append(("encode_bound_payload", {"secret_hash": sh42, "m": "68656c6c6f"}))
    c = field_to_bytes(commitment(domain_tag(1, DEFAULT_EMITTER, 5), b"hello")).hex()
    inputs.append(
        (
            "encode_receipt",
            {
                "version": 1,
                "orig_emitter_chain": 1,
                "orig_emitter": default_emitter,
                "orig_sequence": 5,
                "c": c,
                "aztec_key": "11" * 32,
                "leaf_index": 3,
                "secret_hash": sh42,
                "result_hash": "22" * 32,
            },
        )
    )
    inputs.append(
        (
            "aztec_key",
            {
                "l2_instance": DEFAULT_L2_INSTANCE.hex(),
                "rollup_version": 1,
                "c": c,
                "secret_hash": sh42,
                "leaf_index": 3,
            },
        )
    )
    body = {
        "version": 1,
        "guardian_set_index": 0,
        "timestamp": 1,
        "nonce": 0,
        "emitter_chain": 1,
        "emitter_address": default_emitter,
        "sequence": 0,
        "consistency_level": 1,
        "payload": sh42 + "68656c6c6f",
    }
    signatures = [
        {"guardian_index": 0, "signature": "ab" * 65},
        {"guardian_index": 2, "signature": "cd" * 65},
    ]
    inputs.append(("encode_vaa", {**body, "signatures": signatures}))
    inputs.append(("vaa_body_hash", body))
    return [{"op": op, "inputs": i} for op, i in inputs]


def generate_vectors() -> List[Dict[str, Any]]:
    """
    Compute the golden vector set with this implementation.

    Returns:
        List[Dict[str, Any]]: Vectors in the shipped order.
    """
    vectors = []
    for vector in _vector_inputs():
        output = VECTOR_OPERATIONS[vector["op"]](vector["inputs"])
        vectors.append({**vector, "output": "0x" + bytes(output).hex()})
    return vectors


def load_vectors(path=GOLDEN_VECTORS_PATH) -> List[Dict[str, Any]]:
    return json.loads(Path(path).read_text())


def verify_vectors(vectors: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """
    Recompute every vector and report the ones that disagree.

    Args:
        vectors (List[Dict[str, Any]]): Vectors in the golden format.

    Returns:
        List[Dict[str, Any]]: One entry per mismatch, with the index, op, expected and actual output (or the
            error raised). Empty when everything matches.
    """
    mismatches = []
    for index, vector in enumerate(vectors):
        op = vector.get("op")
        try:
            actual = "0x" + bytes(VECTOR_OPERATIONS[op](vector["inputs"])).hex()
        except KeyError as exc:
            actual = f"error: unknown op or missing input {exc}"
        except (ValueError, TypeError, OverflowError) as exc:
            actual = f"error: {exc}"
        if actual != vector.get("output", "").lower():
            mismatches.append(
                {"index": index, "op": op, "expected": vector.get("output"), "actual": actual}
            )
    if mismatches:
        logger.warning(f"{len(mismatches)} of {len(vectors)} vectors do not match")
    return mismatches
