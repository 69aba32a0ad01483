"""Bit-bounded synopses: project the release's vector representation down
with a shared Gaussian random matrix, store fixed-point coordinates, and
answer any supported query as n times a dot product of decoded vectors."""

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import sdp as sdp_mod
from .errors import NotInSupportError, ValidationError
from .projection import RawPoint

MAGIC = b"DPSYN1"
FORMAT_VERSION = 1


@dataclass
class Synopsis:
    d: int
    k: int
    n: int
    m_prime: int
    bits_per_coord: int
    scale: float
    stored_dim: int
    row_tuples: list
    col_tuples: list
    u_ints: np.ndarray  # (n_rows, stored_dim) int64
    v_ints: np.ndarray  # (n_cols, stored_dim) int64
    header: dict = field(default_factory=dict)

    def __post_init__(self):
        self._row_index = {tuple(t): i for i, t in enumerate(self.row_tuples)}
        self._col_index = {tuple(t): i for i, t in enumerate(self.col_tuples)}

    def decode_u(self, i) -> np.ndarray:
        return self.u_ints[i].astype(np.float64) / self.scale

    def decode_v(self, j) -> np.ndarray:
        return self.v_ints[j].astype(np.float64) / self.scale


def jl_dimension(chi: float, beta: float, n: int, d: int, k: int, t: float | None = None):
    """Deviation scale t = chi * d^{ceil(k/2)/4} / sqrt(n) and the projected
    dimension M' = ceil(12 (k ln d + ln 1/beta) / t^2); natural logs.

    Pass t explicitly to fix the deviation scale instead of deriving it.
    """
    if chi < 1:
        raise ValidationError("chi must be >= 1")
    if not 0 < beta < 1:
        raise ValidationError("beta must lie in (0, 1)")
    if n < 1:
        raise ValidationError("n must be >= 1")
    if t is None:
        t = chi * d ** (math.ceil(k / 2) / 4) / math.sqrt(n)
    m_prime = math.ceil(12.0 * (k * math.log(d) + math.log(1.0 / beta)) / (t * t))
    return t, int(m_prime)


def sample_projection(m_prime: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """An M' x M projection matrix with iid N(0, 1/M') entries."""
    return rng.standard_normal((m_prime, m)) / math.sqrt(m_prime)


def _combined_vectors(raw: RawPoint):
    """Concatenate per-point vectors weighted by sqrt(weight): unit norm rows."""
    first = raw.lpoints[0]
    n_rows = first.u.shape[0]
    n_cols = first.v.shape[0]
    dims = [pt.u.shape[1] for pt in raw.lpoints]
    total = int(sum(dims))
    U = np.zeros((n_rows, total))
    V = np.zeros((n_cols, total))
    off = 0
    for w, pt in zip(raw.weights, raw.lpoints):
        s = math.sqrt(max(float(w), 0.0))
        U[:, off : off + pt.u.shape[1]] = s * pt.u
        V[:, off : off + pt.v.shape[1]] = s * pt.v
        off += pt.u.shape[1]
    return U, V


def jl_compress(
    raw: RawPoint,
    chi: float,
    beta: float,
    rng: np.random.Generator,
    t: float | None = None,
) -> Synopsis:
    """Compress a raw release point into a fixed-point synopsis.

    One shared M' x M matrix with iid N(0, 1/M') entries projects every
    combined vector, preserving each dot product in expectation with
    Pr[|deviation| > 3t] <= 6 exp(-M' t^2 / 6). When M' is at least the
    combined dimension the projection is skipped (identity shortcut).
    Coordinates are stored as signed fixed-point integers of
    ceil(log2 n) + ceil(log2 M') bits, which adds at most ~1/n to any
    decoded dot product.
    """
    if not raw.lpoints:
        raise ValidationError("raw point has no relaxation points")
    t, m_prime = jl_dimension(chi, beta, raw.n, raw.d, raw.k, t=t)
    U, V = _combined_vectors(raw)
    M = U.shape[1]
    identity = m_prime >= M
    if identity:
        PU, PV = U, V
        stored_dim = M
    else:
        proj = sample_projection(m_prime, M, rng)
        PU = U @ proj.T
        PV = V @ proj.T
        stored_dim = m_prime
    bits = math.ceil(math.log2(raw.n)) + math.ceil(math.log2(m_prime)) if raw.n > 1 else math.ceil(
        math.log2(m_prime)
    )
    bits = max(bits, 2)
    scale = 2.0**bits / math.sqrt(m_prime)
    limit = 2 ** (bits - 1) - 1
    u_raw = np.rint(PU * scale)
    v_raw = np.rint(PV * scale)
    clamp_count = int(np.sum(np.abs(u_raw) > limit) + np.sum(np.abs(v_raw) > limit))
    u_ints = np.clip(u_raw, -limit, limit).astype(np.int64)
    v_ints = np.clip(v_raw, -limit, limit).astype(np.int64)
    first = raw.lpoints[0]
    row_tuples = sorted(first.row_index, key=first.row_index.get)
    col_tuples = sorted(first.col_index, key=first.col_index.get)
    header = {
        "version": FORMAT_VERSION,
        "chi": chi,
        "beta": beta,
        "t": t,
        "identity_shortcut": identity,
        "clamp_count": clamp_count,
        "combined_dim": M,
    }
    return Synopsis(
        d=raw.d,
        k=raw.k,
        n=raw.n,
        m_prime=m_prime,
        bits_per_coord=bits,
        scale=scale,
        stored_dim=stored_dim,
        row_tuples=[tuple(t_) for t_ in row_tuples],
        col_tuples=[tuple(t_) for t_ in col_tuples],
        u_ints=u_ints,
        v_ints=v_ints,
        header=header,
    )


def reconstruct_answer(syn: Synopsis, q) -> float:
    """n times the decoded dot product for query q's split tuples."""
    q = tuple(int(i) for i in q)
    if len(q) != syn.k:
        raise NotInSupportError(f"tuple {q} does not have length k={syn.k}")
    s, t = sdp_mod.split_query(q)
    i = syn._row_index.get(s)
    j = syn._col_index.get(t)
    if i is None or j is None:
        raise NotInSupportError(f"query {q} is outside the synopsis catalogs")
    return syn.n * float(syn.decode_u(i) @ syn.decode_v(j))


def synopsis_size_bits(syn: Synopsis) -> int:
    """Exact payload bit count plus the header's size in bits."""
    n_vec = len(syn.row_tuples) + len(syn.col_tuples)
    payload = n_vec * syn.stored_dim * syn.bits_per_coord
    header = len(_header_bytes(syn)) * 8
    return payload + header


# binary format ----------------------------------------------------------------

def _header_bytes(syn: Synopsis) -> bytes:
    head = {
        "d": syn.d,
        "k": syn.k,
        "n": syn.n,
        "m_prime": syn.m_prime,
        "bits_per_coord": syn.bits_per_coord,
        "scale": syn.scale,
        "stored_dim": syn.stored_dim,
        "row_tuples": [list(t) for t in syn.row_tuples],
        "col_tuples": [list(t) for t in syn.col_tuples],
        **syn.header,
    }
    return json.dumps(head, sort_keys=True).encode("utf-8")


def _pack_ints(values: np.ndarray, bits: int) -> bytes:
    """Bit-pack signed ints as offset-binary fields of `bits` bits, little-endian."""
    offset = values.astype(np.int64) + (1 << (bits - 1))
    mask = (offset[:, None] >> np.arange(bits, dtype=np.int64)) & 1
    return np.packbits(mask.astype(np.uint8).ravel(), bitorder="little").tobytes()

def _unpack_ints(blob: bytes, count: int, bits: int) -> np.ndarray:
    raw = np.unpackbits(np.frombuffer(blob, dtype=np.uint8), bitorder="little")
    raw = raw[: count * bits].reshape(count, bits).astype(np.int64)
    vals = (raw << np.arange(bits, dtype=np.int64)).sum(axis=1)
    return vals - (1 << (bits - 1))


def save_synopsis(syn: Synopsis, path):
    header = _header_bytes(syn)
    flat = np.concatenate([syn.u_ints.ravel(), syn.v_ints.ravel()])
    payload = _pack_ints(flat, syn.bits_per_coord)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(payload)


def load_synopsis(path) -> Synopsis:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValidationError(f"{path} is not a synopsis file (bad magic)")
        (hlen,) = struct.unpack("<I", fh.read(4))
        head = json.loads(fh.read(hlen).decode("utf-8"))
        blob = fh.read()
    n_rows = len(head["row_tuples"])
    n_cols = len(head["col_tuples"])
    stored = int(head["stored_dim"])
    bits = int(head["bits_per_coord"])
    flat = _unpack_ints(blob, (n_rows + n_cols) * stored, bits)
    u_ints = flat[: n_rows * stored].reshape(n_rows, stored)
    v_ints = flat[n_rows * stored :].reshape(n_cols, stored)
    known = {"d", "k", "n", "m_prime", "bits_per_coord", "scale", "stored_dim", "row_tuples", "col_tuples"}
    extra = {kk: vv for kk, vv in head.items() if kk not in known}
    return Synopsis(
        d=int(head["d"]),
        k=int(head["k"]),
        n=int(head["n"]),
        m_prime=int(head["m_prime"]),
        bits_per_coord=bits,
        scale=float(head["scale"]),
        stored_dim=stored,
        row_tuples=[tuple(t) for t in head["row_tuples"]],
        col_tuples=[tuple(t) for t in head["col_tuples"]],
        u_ints=u_ints,
        v_ints=v_ints,
        header=extra,
    )
