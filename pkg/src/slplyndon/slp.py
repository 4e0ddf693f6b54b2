"""Straight-line programs: validation, parsing, slicing, and random access.

An SLP is a grammar in Chomsky normal form deriving exactly one byte string.
Rules are 1-based: X_1..X_n, each either a terminal byte or the concatenation
of two earlier variables, so the derived string can be exponentially longer
than the grammar. Everything here works on the grammar without decompressing,
except the explicit `decompress`/`span_bytes` oracle helpers.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

# All lengths and positions must stay below 2**63 so that every sum or
# shifted position computed anywhere in the package fits a 64-bit word.
LENGTH_LIMIT = 1 << 63

DEFAULT_DECOMPRESS_LIMIT = 10**6


class SlpError(ValueError):
    """Invalid grammar, span, or argument."""


class SlpFormatError(SlpError):
    """Malformed .slp input; the message carries the offending line number."""


@dataclass(frozen=True)
class Terminal:
    """Rule deriving a single byte (0-255)."""

    byte: int


@dataclass(frozen=True)
class Concat:
    """Rule deriving val(left) followed by val(right); both indices are smaller."""

    left: int
    right: int


Rule = Terminal | Concat


class Slp:
    """A validated straight-line program.

    Immutable after construction and safe to share across threads. Besides the
    rule list, per-variable expansion lengths and derivation-tree heights are
    precomputed (index 0 of those tables is unused padding; variables are
    1-based).
    """

    __slots__ = ("rules", "root", "lengths", "heights", "_terms", "_lefts", "_rights")

    def __init__(self, rules: list[Rule], root: int | None = None):
        if not rules:
            raise SlpError("empty program")
        n = len(rules)
        terms = [-1] * (n + 1)
        lefts = [0] * (n + 1)
        rights = [0] * (n + 1)
        lengths = [0] * (n + 1)
        heights = [0] * (n + 1)
        for i, rule in enumerate(rules, start=1):
            if isinstance(rule, Terminal):
                if not 0 <= rule.byte <= 255:
                    raise SlpError(f"X{i}: byte value {rule.byte} out of range")
                terms[i] = rule.byte
                lengths[i] = 1
            elif isinstance(rule, Concat):
                l, r = rule.left, rule.right
                if not (1 <= l < i and 1 <= r < i):
                    raise SlpError(f"X{i}: children must be earlier variables, got ({l}, {r})")
                length = lengths[l] + lengths[r]
                if length >= LENGTH_LIMIT:
                    raise SlpError(f"X{i}: expansion length would reach 2^63")
                lefts[i] = l
                rights[i] = r
                lengths[i] = length
                heights[i] = max(heights[l], heights[r]) + 1
            else:
                raise SlpError(f"X{i}: not a rule: {rule!r}")
        if root is None:
            root = n
        elif not 1 <= root <= n:
            raise SlpError(f"root {root} is not a variable")
        self.rules = list(rules)
        self.root = root
        self.lengths = lengths
        self.heights = heights
        self._terms = terms
        self._lefts = lefts
        self._rights = rights

    @property
    def n(self) -> int:
        """Number of rules (grammar size)."""
        return len(self.rules)

    @property
    def total_len(self) -> int:
        """Length of the derived string."""
        return self.lengths[self.root]

    @property
    def height(self) -> int:
        """Derivation-tree height of the root (terminals have height 0)."""
        return self.heights[self.root]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Slp):
            return NotImplemented
        return self.rules == other.rules and self.root == other.root

    def __repr__(self) -> str:
        return f"Slp(n={self.n}, N={self.total_len}, root=X{self.root})"


@dataclass(frozen=True)
class Span:
    """Address of a substring: `length` bytes of val(`var`) from 1-based `start`.

    `length` may be 0 (the empty string); then `start` may point one past the
    end of the expansion.
    """

    var: int
    start: int
    length: int


def check_span(slp: Slp, span: Span) -> None:
    """Raise SlpError unless `span` addresses a substring of val(span.var)."""
    if not 1 <= span.var <= slp.n:
        raise SlpError(f"span variable X{span.var} does not exist")
    if span.length < 0 or span.start < 1:
        raise SlpError(f"bad span {span}")
    if span.start + span.length - 1 > slp.lengths[span.var]:
        raise SlpError(f"span {span} exceeds |X{span.var}| = {slp.lengths[span.var]}")


def char_at(slp: Slp, j: int, var: int | None = None) -> int:
    """Byte at 1-based position `j` of val(`var`) (default: the root).

    Descends the derivation tree by the cached lengths; cost is proportional
    to the height, not the expansion length.
    """
    v = slp.root if var is None else var
    if not 1 <= v <= slp.n:
        raise SlpError(f"variable X{v} does not exist")
    lengths = slp.lengths
    if not 1 <= j <= lengths[v]:
        raise SlpError(f"position {j} out of range for |X{v}| = {lengths[v]}")
    terms = slp._terms
    lefts = slp._lefts
    while terms[v] < 0:
        l = lefts[v]
        ll = lengths[l]
        if j <= ll:
            v = l
        else:
            j -= ll
            v = slp._rights[v]
    return terms[v]


def decompress(slp: Slp, limit: int = DEFAULT_DECOMPRESS_LIMIT, var: int | None = None) -> bytes:
    """Fully expand val(`var`) (default: the root).

    Refuses when the expansion is longer than `limit`; this is oracle/test
    support, not part of the compressed-space query path.
    """
    v = slp.root if var is None else var
    if not 1 <= v <= slp.n:
        raise SlpError(f"variable X{v} does not exist")
    if slp.lengths[v] > limit:
        raise SlpError(f"too large to decompress: length {slp.lengths[v]} > limit {limit}")
    terms = slp._terms
    lefts = slp._lefts
    rights = slp._rights
    out = bytearray()
    stack = [v]
    while stack:
        v = stack.pop()
        b = terms[v]
        if b >= 0:
            out.append(b)
        else:
            stack.append(rights[v])
            stack.append(lefts[v])
    return bytes(out)


def span_bytes(slp: Slp, span: Span, limit: int = DEFAULT_DECOMPRESS_LIMIT) -> bytes:
    """Decompressed bytes of one span; cost O(span.length + height)."""
    check_span(slp, span)
    if span.length > limit:
        raise SlpError(f"too large to decompress: length {span.length} > limit {limit}")
    out = bytearray()
    for v in _cover(slp, span.var, span.start, span.start + span.length - 1):
        out += decompress(slp, limit=limit, var=v)
    return bytes(out)


def _prefix_cover(slp: Slp, v: int, hi: int) -> list[int]:
    """Variables whose concatenated expansions equal val(v)[1..hi]."""
    lengths = slp.lengths
    lefts = slp._lefts
    pieces = []
    while hi < lengths[v]:
        l = lefts[v]
        if hi <= lengths[l]:
            v = l
        else:
            pieces.append(l)
            hi -= lengths[l]
            v = slp._rights[v]
    pieces.append(v)
    return pieces


def _suffix_cover(slp: Slp, v: int, lo: int) -> list[int]:
    """Variables whose concatenated expansions equal val(v)[lo..|v|]."""
    lengths = slp.lengths
    lefts = slp._lefts
    pending = []
    while lo > 1:
        l = lefts[v]
        if lo <= lengths[l]:
            pending.append(slp._rights[v])
            v = l
        else:
            lo -= lengths[l]
            v = slp._rights[v]
    pending.append(v)
    pending.reverse()
    return pending


def _cover(slp: Slp, v: int, lo: int, hi: int) -> list[int]:
    """Variables whose concatenated expansions equal val(v)[lo..hi] (may be [])."""
    if lo > hi:
        return []
    lengths = slp.lengths
    lefts = slp._lefts
    while True:
        if lo == 1 and hi == lengths[v]:
            return [v]
        l = lefts[v]
        ll = lengths[l]
        if hi <= ll:
            v = l
        elif lo > ll:
            lo -= ll
            hi -= ll
            v = slp._rights[v]
        else:
            return _suffix_cover(slp, l, lo) + _prefix_cover(slp, slp._rights[v], hi - ll)


def _chain(slp: Slp, pieces: list[int]) -> Slp:
    """Grammar extending `slp` with a left-leaning chain concatenating `pieces`.

    Original rules keep their indices; the chain root becomes the new root.
    """
    if len(pieces) == 1:
        return Slp(slp.rules, root=pieces[0])
    rules = list(slp.rules)
    prev = pieces[0]
    for v in pieces[1:]:
        rules.append(Concat(prev, v))
        prev = len(rules)
    return Slp(rules, root=prev)


def slice_slp(slp: Slp, i: int, j: int) -> Slp:
    """Grammar whose value is val(root)[i..j].

    All original rules are retained unchanged; at most 4*(height+1) new
    concatenation rules are appended (two boundary descents plus the chain
    joining the covering variables).
    """
    if not 1 <= i <= j <= slp.total_len:
        raise SlpError(f"slice [{i}..{j}] out of range for length {slp.total_len}")
    return _chain(slp, _cover(slp, slp.root, i, j))


@dataclass(frozen=True)
class PrefixSpine:
    """Decomposition of val(root)[1..R] into existing variables plus a chain.

    `vars` lists the existing variables V_1..V_t whose concatenation is the
    prefix; `slp` extends the original grammar with the left-leaning chain
    Y_2 = Y_1 V_2, ..., Y_t = Y_{t-1} V_t (listed in `new_vars`, empty when
    t = 1) and has the chain root as its root. Because rules are appended,
    per-variable results memoized on the original grammar stay valid.
    """

    slp: Slp
    vars: list[int]
    new_vars: list[int]


def prefix_spine(slp: Slp, prefix_len: int) -> PrefixSpine:
    """Cover val(root)[1..prefix_len] by at most height+1 existing variables."""
    if not 1 <= prefix_len <= slp.total_len:
        raise SlpError(f"prefix length {prefix_len} out of range for length {slp.total_len}")
    pieces = _prefix_cover(slp, slp.root, prefix_len)
    chained = _chain(slp, pieces)
    return PrefixSpine(chained, pieces, list(range(slp.n + 1, chained.n + 1)))


def _leaf_fold(word: bytes) -> list[Rule]:
    """Terminal rules for the distinct bytes of `word` plus a left fold deriving it."""
    rules: list[Rule] = []
    var_of = {}
    for b in sorted(set(word)):
        rules.append(Terminal(b))
        var_of[b] = len(rules)
    prev = var_of[word[0]]
    for b in word[1:]:
        rules.append(Concat(prev, var_of[b]))
        prev = len(rules)
    return rules


def gen_power(word: bytes, k: int) -> Slp:
    """Grammar for `word` repeated 2**k times, built by repeated squaring."""
    if not word:
        raise SlpError("empty word")
    if k < 0:
        raise SlpError("negative exponent")
    if len(word) << k >= LENGTH_LIMIT:
        raise SlpError(f"overflow: {len(word)} * 2^{k} reaches 2^63")
    rules = _leaf_fold(word)
    last = len(rules)
    for _ in range(k):
        rules.append(Concat(last, last))
        last = len(rules)
    return Slp(rules)


def gen_fibonacci(k: int) -> Slp:
    """Fibonacci-word grammar: F_1 = "b", F_2 = "a", F_i = F_{i-1} F_{i-2}."""
    if k < 1:
        raise SlpError("index must be at least 1")
    if k > 87:
        raise SlpError("overflow: Fibonacci words beyond index 87 are rejected")
    rules: list[Rule] = [Terminal(ord("b"))]
    if k >= 2:
        rules.append(Terminal(ord("a")))
    for i in range(3, k + 1):
        rules.append(Concat(i - 1, i - 2))
    return Slp(rules)


def gen_random(n_rules: int, seed: int, alphabet: bytes = b"ab", max_len: int | None = None) -> Slp:
    """Random valid grammar with exactly `n_rules` rules; deterministic per seed.

    Concatenations pick uniform random earlier variables, re-drawing (with a
    shortest-pair fallback) when the expansion would exceed `max_len`, so
    generated lengths saturate near the cap instead of exploding.
    """
    if n_rules < 1:
        raise SlpError("need at least one rule")
    if not alphabet:
        raise SlpError("empty alphabet")
    cap = LENGTH_LIMIT - 1 if max_len is None else min(max_len, LENGTH_LIMIT - 1)
    if cap < 2 and n_rules > min(len(alphabet), n_rules):
        raise SlpError("max_len too small for any concatenation")
    rng = random.Random(seed)
    rules: list[Rule] = []
    lens = []
    for b in alphabet[: min(len(alphabet), n_rules)]:
        rules.append(Terminal(b))
        lens.append(1)
    while len(rules) < n_rules:
        k = len(rules)
        for _ in range(32):
            l = rng.randint(1, k)
            r = rng.randint(1, k)
            if lens[l - 1] + lens[r - 1] <= cap:
                break
        else:
            order = sorted(range(1, k + 1), key=lambda v: lens[v - 1])
            l, r = order[0], order[min(1, k - 1)]
        rules.append(Concat(l, r))
        lens.append(lens[l - 1] + lens[r - 1])
    return Slp(rules)


def build_from_text(text: bytes) -> Slp:
    """Balanced-parse grammar whose value equals `text`.

    Height is at most ceil(log2 |text|) + 1; this is the ingestion path for
    raw (uncompressed) inputs, not a compressor.
    """
    if not text:
        raise SlpError("empty input")
    rules: list[Rule] = []
    var_of = {}
    for b in sorted(set(text)):
        rules.append(Terminal(b))
        var_of[b] = len(rules)
    level = [var_of[b] for b in text]
    while len(level) > 1:
        nxt = []
        for a, b in zip(level[::2], level[1::2]):
            rules.append(Concat(a, b))
            nxt.append(len(rules))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return Slp(rules, root=level[0])


def parse_slp(text: str | bytes) -> Slp:
    """Parse the .slp text format.

    Comment lines start with `#`. Rules appear one per line in index order:
    `<i> = chr <d>` for a terminal byte d, or `<i> = <j> <k>` with j, k < i.
    An optional final `root = <i>` overrides the default root (last rule).
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SlpFormatError(f"not UTF-8 text: {exc}") from None
    rules: list[Rule] = []
    root = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if root is not None:
            raise SlpFormatError(f"line {ln}: content after the root directive")
        parts = line.split()
        if parts[0] == "root":
            if len(parts) != 3 or parts[1] != "=":
                raise SlpFormatError(f"line {ln}: expected 'root = <i>'")
            root = _parse_uint(parts[2], ln)
            if not 1 <= root <= len(rules):
                raise SlpFormatError(f"line {ln}: root {root} is not a defined variable")
            continue
        if len(parts) != 4 or parts[1] != "=":
            raise SlpFormatError(f"line {ln}: unrecognized syntax: {line!r}")
        i = _parse_uint(parts[0], ln)
        if i != len(rules) + 1:
            raise SlpFormatError(f"line {ln}: expected rule {len(rules) + 1}, got {i}")
        if parts[2] == "chr":
            byte = _parse_uint(parts[3], ln)
            if byte > 255:
                raise SlpFormatError(f"line {ln}: byte value {byte} out of range")
            rules.append(Terminal(byte))
        else:
            j = _parse_uint(parts[2], ln)
            k = _parse_uint(parts[3], ln)
            if j >= i or k >= i:
                raise SlpFormatError(f"line {ln}: forward or self reference in rule {i}")
            if j < 1 or k < 1:
                raise SlpFormatError(f"line {ln}: variable indices start at 1")
            rules.append(Concat(j, k))
    if not rules:
        raise SlpFormatError("empty program")
    return Slp(rules, root=root)


def _parse_uint(token: str, ln: int) -> int:
    if not token.isdigit():
        raise SlpFormatError(f"line {ln}: expected a non-negative integer, got {token!r}")
    return int(token)


def serialize_slp(slp: Slp) -> str:
    """Emit the .slp text format (LF line endings, no trailing whitespace).

    Parsing the result reproduces the grammar rule for rule, root included.
    """
    lines = [f"# slp n={slp.n} N={slp.total_len}"]
    for i, rule in enumerate(slp.rules, start=1):
        if isinstance(rule, Terminal):
            lines.append(f"{i} = chr {rule.byte}")
        else:
            lines.append(f"{i} = {rule.left} {rule.right}")
    if slp.root != slp.n:
        lines.append(f"root = {slp.root}")
    return "\n".join(lines) + "\n"
