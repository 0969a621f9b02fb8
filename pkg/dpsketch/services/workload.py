import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import httpx
import numpy as np

from ..sketches.linear_sketch import StreamOp

logger = logging.getLogger(__name__)

# Zipf ranks beyond this are truncated; the tail mass there is negligible for s > 1
ZIPF_MAX_SUPPORT = 1 << 24

# HTTP client, connection pooling uchun
_http_client: httpx.AsyncClient | None = None


class StreamSpecError(ValueError):
    """Stream sozlamalari noto'g'ri."""


class StreamFormatError(ValueError):
    """Stream faylidagi qator noto'g'ri formatda."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class FetchError(RuntimeError):
    """Stream faylini tarmoqdan olib bo'lmadi."""


class Source(str, Enum):
    ZIPF = "zipf"
    FILE = "file"


@dataclass(frozen=True)
class StreamSpec:
    source: Source = Source.ZIPF
    n: int = 100_000
    universe_bits: int = 16
    zipf_s: float = 1.1
    p_del: float = 0.0
    seed: int = 0
    path: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.source, Source):
            try:
                object.__setattr__(self, "source", Source(str(self.source).lower()))
            except ValueError as exc:
                raise StreamSpecError(f"unknown stream source {self.source!r}") from exc
        if not 1 <= self.universe_bits <= 64:
            raise StreamSpecError(f"universe_bits must be in [1, 64], got {self.universe_bits}")
        if not 0.0 <= self.p_del < 0.5:
            raise StreamSpecError(f"p_del must lie in [0, 0.5), got {self.p_del}")
        if self.source is Source.ZIPF:
            if self.n < 1:
                raise StreamSpecError(f"stream length must be >= 1, got {self.n}")
            if not self.zipf_s > 0:
                raise StreamSpecError(f"zipf exponent must be positive, got {self.zipf_s}")
        elif not self.path:
            raise StreamSpecError("file source needs a path or URL")

    @property
    def universe(self) -> int:
        return 1 << self.universe_bits


class Stream:
    """Turnstile stream stored column-wise; iterates as StreamOp."""

    def __init__(self, items: Union[np.ndarray, Iterable[int]], values: Union[np.ndarray, Iterable[int]]):
        self.items = np.asarray(items, dtype=np.uint64).ravel()
        self.values = np.asarray(values, dtype=np.int8).ravel()
        if self.items.shape != self.values.shape:
            raise ValueError("items and values must have the same length")
        if np.any((self.values != 1) & (self.values != -1)):
            raise ValueError("stream values must be +1 or -1")

    @classmethod
    def from_ops(cls, ops: Iterable[StreamOp]) -> "Stream":
        ops = list(ops)
        return cls([op.item for op in ops], [op.value for op in ops])

    @classmethod
    def inserts(cls, items: Iterable[int]) -> "Stream":
        if not isinstance(items, np.ndarray):
            items = list(items)
        items = np.asarray(items, dtype=np.uint64)
        return cls(items, np.ones(items.shape, dtype=np.int8))

    def __len__(self) -> int:
        return int(self.items.size)

    def __iter__(self) -> Iterator[StreamOp]:
        for item, value in zip(self.items.tolist(), self.values.tolist()):
            yield StreamOp(item, value)

    def __getitem__(self, index: int) -> StreamOp:
        return StreamOp(int(self.items[index]), int(self.values[index]))

    def concat(self, other: "Stream") -> "Stream":
        return Stream(
            np.concatenate([self.items, other.items]),
            np.concatenate([self.values, other.values]),
        )

    def is_insert_only(self) -> bool:
        return bool(np.all(self.values == 1))

    def delete_fraction(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.mean(self.values == -1))

    def net_counts_nonnegative(self) -> bool:
        """Har bir prefiksda barcha net sanoqlar >= 0 ekanini tekshirish."""
        if len(self) == 0:
            return True
        order = np.lexsort((np.arange(len(self)), self.items))
        items = self.items[order]
        running = np.cumsum(self.values[order].astype(np.int64))
        starts = np.flatnonzero(np.r_[True, items[1:] != items[:-1]])
        offsets = np.repeat(np.r_[0, running[starts[1:] - 1]], np.diff(np.r_[starts, len(items)]))
        return bool(np.all(running - offsets >= 0))


def gen_zipf(spec: StreamSpec) -> Stream:
    """Zipf taqsimotidan n ta insert hosil qilish (rank r ehtimoli ~ r^-s).

    Item id is rank - 1, sampled by inverse CDF over the truncated harmonic weights.
    """
    if spec.source is not Source.ZIPF:
        raise StreamSpecError("gen_zipf needs a zipf stream spec")
    support = min(spec.universe, ZIPF_MAX_SUPPORT)
    if support < spec.universe:
        logger.debug(f"Zipf support truncated to {support} ranks (universe {spec.universe})")
    weights = np.arange(1, support + 1, dtype=np.float64) ** (-spec.zipf_s)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    rng = np.random.default_rng(spec.seed)
    ranks = np.searchsorted(cdf, rng.random(spec.n), side="right")
    np.minimum(ranks, support - 1, out=ranks)
    return Stream.inserts(ranks.astype(np.uint64))


def _parse_value(raw: str, line_no: int) -> int:
    token = raw.strip()
    if token in ("+1", "1"):
        return 1
    if token == "-1":
        return -1
    raise StreamFormatError(line_no, f"value must be +1 or -1, got {token!r}")


def parse_stream_text(text: str, universe_bits: int = 64) -> Stream:
    """`<id>,<+1|-1>` qatorlarini o'qish; `#` bilan boshlangan qatorlar izoh."""
    universe = 1 << universe_bits
    items: list[int] = []
    values: list[int] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split(",")
        if len(parts) != 2:
            raise StreamFormatError(line_no, f"expected '<id>,<+1|-1>', got {stripped!r}")
        raw_id = parts[0].strip()
        if not (raw_id.isascii() and raw_id.isdigit()):
            raise StreamFormatError(line_no, f"id must be an unsigned decimal, got {raw_id!r}")
        item = int(raw_id)
        if item >= universe:
            raise StreamFormatError(line_no, f"id {item} is outside the universe [0, 2^{universe_bits})")
        values.append(_parse_value(parts[1], line_no))
        items.append(item)
    return Stream(np.array(items, dtype=np.uint64), np.array(values, dtype=np.int8))


def load_stream(path: Union[str, Path], universe_bits: int = 64) -> Stream:
    path = Path(path)
    data = path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line_no = data.count(b"\n", 0, exc.start) + 1
        raise StreamFormatError(line_no, f"invalid UTF-8 in {path.name}") from exc
    stream = parse_stream_text(text, universe_bits=universe_bits)
    logger.info(f"Loaded {len(stream)} ops from {path}")
    return stream


def is_remote(path: str) -> bool:
    return str(path).lower().startswith(("http://", "https://"))


async def get_http_client(timeout: float = 30.0) -> httpx.AsyncClient:
    """HTTP client olish yoki yaratish (connection pooling)."""
    global _http_client

    if _http_client is None or _http_client.is_closed:
        _http_client = httpx.AsyncClient(
            timeout=timeout,
            follow_redirects=True,
            limits=httpx.Limits(max_connections=10, max_keepalive_connections=5),
        )

    return _http_client


async def close_http_client() -> None:
    """HTTP client ni yopish."""
    global _http_client

    if _http_client is not None and not _http_client.is_closed:
        await _http_client.aclose()
        _http_client = None


async def fetch_stream(
    url: str,
    universe_bits: int = 64,
    client: Optional[httpx.AsyncClient] = None,
    timeout: Optional[float] = None,
) -> Stream:
    """Stream faylini HTTP(S) orqali olish; format load_stream bilan bir xil."""
    client = client or await get_http_client()
    request_timeout = httpx.USE_CLIENT_DEFAULT if timeout is None else timeout
    try:
        response = await client.get(url, timeout=request_timeout)
        response.raise_for_status()
    except httpx.HTTPStatusError as exc:
        status = exc.response.status_code if exc.response is not None else "unknown"
        logger.error(f"HTTP error {status} for stream URL: {url}")
        raise FetchError(f"HTTP {status} while fetching {url}") from exc
    except httpx.HTTPError as exc:
        logger.error(f"Network error for stream URL {url}: {str(exc)}")
        raise FetchError(f"network error while fetching {url}: {exc}") from exc

    stream = parse_stream_text(response.text, universe_bits=universe_bits)
    logger.info(f"Fetched {len(stream)} ops from {url}")
    return stream


def with_deletions(stream: Stream, p_del: float, seed: int) -> Stream:
    """Insert-only streamga o'chirishlarni qo'shish (strict turnstile).

    Every delete pairs with a distinct earlier insert of the same item and is
    placed at a uniformly random later position, so net counts stay >= 0 at
    every prefix. About p_del of the output ops are deletes.
    """
    if not 0.0 <= p_del < 0.5:
        raise StreamSpecError(f"p_del must lie in [0, 0.5), got {p_del}")
    if not stream.is_insert_only():
        raise StreamSpecError("with_deletions needs an insert-only stream")
    if p_del == 0.0 or len(stream) == 0:
        return stream

    n = len(stream)
    deletes = min(n, int(round(p_del * n / (1.0 - p_del))))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n, size=deletes, replace=False))
    insert_keys = np.arange(n, dtype=np.float64)
    delete_keys = chosen + 0.5 + rng.random(deletes) * (n - chosen)
    order = np.argsort(np.concatenate([insert_keys, delete_keys]), kind="stable")
    items = np.concatenate([stream.items, stream.items[chosen]])[order]
    values = np.concatenate([
        np.ones(n, dtype=np.int8),
        -np.ones(deletes, dtype=np.int8),
    ])[order]
    return Stream(items, values)


def build_stream(spec: StreamSpec, base: Optional[Stream] = None) -> Stream:
    """StreamSpec bo'yicha workload tayyorlash."""
    if spec.source is Source.ZIPF:
        stream = gen_zipf(spec)
    elif base is not None:
        stream = base
    else:
        if is_remote(spec.path):
            raise StreamSpecError("remote streams must be fetched with fetch_stream first")
        stream = load_stream(spec.path, universe_bits=spec.universe_bits)

    if spec.p_del > 0:
        delete_seed = int(np.random.SeedSequence([spec.seed, 1]).generate_state(1)[0])
        stream = with_deletions(stream, spec.p_del, delete_seed)
    return stream
