"""Dynamic-trace ingestion: mnemonic categorization and transition counting.

Trace file format (defined by this package, collector-agnostic): UTF-8
text, one executed instruction per line.  The first whitespace-delimited
token is the mnemonic; operands and addresses after it are ignored.
Blank lines and lines starting with ``#`` are skipped.  ``rep``-family
prefixes combine with the following token (``rep movsb`` is looked up as
``rep_movsb`` first, then as ``movsb``); a ``lock`` prefix is dropped.

Category map file format: first non-comment line is the ordered list of
category names (the category index is the position in that list);
every following line is ``<mnemonic> <category-name>``.  The fallback
category for unknown mnemonics is the one named ``other`` when present,
else the last listed.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, TraceIOError

#: Traces shorter than this many instructions are excluded from training
#: by default (they may still be scored).
MIN_TRAIN_LENGTH = 2000

CAT1_NAMES = ("math", "logic", "priv", "branch", "memory", "stack", "nop", "other")

REP_PREFIXES = {"rep": "rep", "repe": "repe", "repz": "repe", "repne": "repne", "repnz": "repne"}
DROP_PREFIXES = {"lock", "bnd", "notrack"}

# Authored table of common x86 mnemonics for the 8-class categorization.
# Anything absent falls back to "other".
_CAT1_TABLE = {
    "math": [
        "add", "adc", "sub", "sbb", "mul", "imul", "div", "idiv", "inc", "dec",
        "neg", "cmp", "xadd", "cmpxchg", "cmpxchg8b", "cmpxchg16b", "adcx", "adox",
        "mulx", "daa", "das", "aaa", "aas", "aam", "aad", "cbw", "cwde", "cdqe",
        "cwd", "cdq", "cqo",
        "fadd", "faddp", "fiadd", "fsub", "fsubp", "fisub", "fsubr", "fsubrp",
        "fmul", "fmulp", "fimul", "fdiv", "fdivp", "fidiv", "fdivr", "fdivrp",
        "fsqrt", "fabs", "fchs", "frndint", "fscale", "fprem", "fprem1",
        "fcom", "fcomp", "fcompp", "fcomi", "fcomip", "fucom", "fucomp",
        "fucompp", "fucomi", "fucomip", "ficom", "ficomp", "ftst", "fxam",
        "fsin", "fcos", "fsincos", "fptan", "fpatan", "f2xm1", "fyl2x", "fyl2xp1",
        "addps", "addpd", "addss", "addsd", "subps", "subpd", "subss", "subsd",
        "mulps", "mulpd", "mulss", "mulsd", "divps", "divpd", "divss", "divsd",
        "sqrtps", "sqrtpd", "sqrtss", "sqrtsd", "maxps", "maxpd", "maxss", "maxsd",
        "minps", "minpd", "minss", "minsd", "cmpps", "cmppd", "cmpss", "cmpsd",
        "comiss", "comisd", "ucomiss", "ucomisd",
        "paddb", "paddw", "paddd", "paddq", "psubb", "psubw", "psubd", "psubq",
        "pmullw", "pmulhw", "pmuludq", "pmaddwd", "pcmpeqb", "pcmpeqw", "pcmpeqd",
        "pcmpgtb", "pcmpgtw", "pcmpgtd", "pavgb", "pavgw",
        "cvtsi2ss", "cvtsi2sd", "cvtss2si", "cvtsd2si", "cvttss2si", "cvttsd2si",
        "cvtps2pd", "cvtpd2ps", "cvtss2sd", "cvtsd2ss", "cvtdq2ps", "cvtps2dq",
    ],
    "logic": [
        "and", "or", "xor", "not", "test", "shl", "sal", "shr", "sar", "shld",
        "shrd", "rol", "ror", "rcl", "rcr", "bt", "bts", "btr", "btc", "bsf",
        "bsr", "bswap", "popcnt", "lzcnt", "tzcnt", "andn",
        "clc", "stc", "cmc", "cld", "std", "lahf", "sahf", "salc",
        "sete", "setz", "setne", "setnz", "seta", "setae", "setb", "setbe",
        "setg", "setge", "setl", "setle", "sets", "setns", "seto", "setno",
        "setp", "setpe", "setnp", "setpo", "setc", "setnc", "setnae", "setna",
        "setnbe", "setnb", "setnge", "setng", "setnle", "setnl",
        "pand", "pandn", "por", "pxor", "psllw", "pslld", "psllq", "psrlw",
        "psrld", "psrlq", "psraw", "psrad", "pslldq", "psrldq",
        "andps", "andpd", "andnps", "andnpd", "orps", "orpd", "xorps", "xorpd",
    ],
    "priv": [
        "cli", "sti", "hlt", "in", "out", "insb", "insw", "insd", "outsb",
        "outsw", "outsd", "int", "int1", "int3", "into", "iret", "iretd", "iretq",
        "sysenter", "sysexit", "syscall", "sysret", "rdmsr", "wrmsr", "rdpmc",
        "lgdt", "lidt", "sgdt", "sidt", "lldt", "sldt", "ltr", "str", "clts",
        "invd", "wbinvd", "invlpg", "lmsw", "smsw", "arpl", "lar", "lsl",
        "verr", "verw", "vmcall", "vmlaunch", "vmresume", "vmxoff", "vmxon",
        "swapgs", "rsm",
    ],
    "branch": [
        "jmp", "call", "ret", "retn", "retf", "je", "jz", "jne", "jnz", "ja",
        "jae", "jb", "jbe", "jg", "jge", "jl", "jle", "jo", "jno", "js", "jns",
        "jp", "jnp", "jpe", "jpo", "jc", "jnc", "jna", "jnae", "jnb", "jnbe",
        "jng", "jnge", "jnl", "jnle", "jcxz", "jecxz", "jrcxz",
        "loop", "loope", "loopz", "loopne", "loopnz", "bound",
    ],
    "memory": [
        "mov", "movsx", "movsxd", "movzx", "lea", "xchg", "xlat", "xlatb",
        "movs", "movsb", "movsw", "movsd", "movsq", "lods", "lodsb", "lodsw",
        "lodsd", "lodsq", "stos", "stosb", "stosw", "stosd", "stosq",
        "cmps", "cmpsb", "cmpsw", "cmpsq", "scas", "scasb", "scasw", "scasd",
        "scasq", "ins", "outs",
        "cmove", "cmovz", "cmovne", "cmovnz", "cmova", "cmovae", "cmovb",
        "cmovbe", "cmovg", "cmovge", "cmovl", "cmovle", "cmovs", "cmovns",
        "cmovo", "cmovno", "cmovp", "cmovnp", "cmovc", "cmovnc",
        "fld", "fld1", "fldz", "fldpi", "fldl2e", "fldl2t", "fldlg2", "fldln2",
        "fst", "fstp", "fist", "fistp", "fisttp", "fild", "fxch", "fldcw",
        "fnstcw", "fstcw", "fnstsw", "fstsw", "fldenv", "fnstenv", "fstenv",
        "frstor", "fnsave", "fsave", "fxsave", "fxrstor",
        "movaps", "movapd", "movups", "movupd", "movdqa", "movdqu", "movd",
        "movq", "movss", "movlps", "movhps", "movlpd", "movhpd", "movmskps",
        "movmskpd", "pmovmskb", "movnti", "movntq", "movntps", "movntpd",
        "movntdq", "lddqu", "maskmovq", "maskmovdqu",
        "punpcklbw", "punpcklwd", "punpckldq", "punpckhbw", "punpckhwd",
        "punpckhdq", "punpcklqdq", "punpckhqdq", "packsswb", "packssdw",
        "packuswb", "pshufw", "pshufd", "pshuflw", "pshufhw", "shufps", "shufpd",
        "unpcklps", "unpckhps", "unpcklpd", "unpckhpd",
        "lds", "les", "lfs", "lgs", "lss",
        "prefetch", "prefetcht0", "prefetcht1", "prefetcht2", "prefetchnta",
        "sfence", "lfence", "mfence", "clflush",
    ],
    "stack": [
        "push", "pop", "pusha", "pushad", "popa", "popad", "pushf", "pushfd",
        "pushfq", "popf", "popfd", "popfq", "enter", "leave",
    ],
    "nop": ["nop", "fnop", "pause"],
    "other": [
        "cpuid", "rdtsc", "rdtscp", "wait", "fwait", "ud2", "ud0", "ud1",
        "emms", "femms", "fninit", "finit", "fclex", "fnclex", "ffree",
        "fincstp", "fdecstp", "xgetbv", "xsetbv", "rdrand", "rdseed",
        "crc32", "movbe", "endbr32", "endbr64",
    ],
}


@dataclass(frozen=True)
class CategoryMap:
    """Mapping from instruction mnemonics to a fixed set of categories."""

    categorization_id: str
    names: tuple[str, ...]
    entries: dict[str, int]
    fallback: int

    @property
    def n_categories(self) -> int:
        return len(self.names)

    def __post_init__(self):
        c = len(self.names)
        if c == 0:
            raise InvalidInputError("category map must define at least one category")
        if not 0 <= self.fallback < c:
            raise InvalidInputError(f"fallback index {self.fallback} out of range for c={c}")
        bad = {m: i for m, i in self.entries.items() if not 0 <= i < c}
        if bad:
            raise InvalidInputError(f"entries reference categories out of range: {bad}")

    def lookup(self, mnemonic: str, rep_prefix: str | None = None) -> int:
        """Category index for one mnemonic, honoring an optional rep prefix.

        The combined form (``rep_movsb``) is tried first so that maps in
        the style of the finest categorization can give repeated string
        instructions their own class; otherwise the prefix collapses
        away and the base mnemonic decides.
        """
        if rep_prefix is not None:
            idx = self.entries.get(f"{rep_prefix}_{mnemonic}")
            if idx is not None:
                return idx
        return self.entries.get(mnemonic, self.fallback)


def _cat1_map() -> CategoryMap:
    entries = {}
    for name, mnemonics in _CAT1_TABLE.items():
        idx = CAT1_NAMES.index(name)
        for m in mnemonics:
            entries[m] = idx
    return CategoryMap(
        categorization_id="cat1",
        names=CAT1_NAMES,
        entries=entries,
        fallback=CAT1_NAMES.index("other"),
    )


def parse_category_map(lines, categorization_id: str) -> CategoryMap:
    """Parse the category map file format from an iterable of lines."""
    names: tuple[str, ...] | None = None
    entries: dict[str, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.lower().split()
        if names is None:
            names = tuple(tokens)
            if len(set(names)) != len(names):
                raise InvalidInputError(f"duplicate category names in header (line {lineno})")
            continue
        if len(tokens) != 2:
            raise InvalidInputError(
                f"line {lineno}: expected '<mnemonic> <category-name>', got {line!r}"
            )
        mnemonic, cat = tokens
        try:
            idx = names.index(cat)
        except ValueError:
            raise InvalidInputError(
                f"line {lineno}: category {cat!r} not in header"
            ) from None
        entries[mnemonic] = idx
    if names is None:
        raise InvalidInputError("category map file has no header line")
    fallback = names.index("other") if "other" in names else len(names) - 1
    return CategoryMap(
        categorization_id=categorization_id,
        names=names,
        entries=entries,
        fallback=fallback,
    )


def load_category_map(path) -> CategoryMap:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceIOError(f"cannot read category map {path}: {exc}") from exc
    return parse_category_map(text.splitlines(), categorization_id=path.stem)


def builtin_map(which: str) -> CategoryMap:
    """One of the four built-in categorizations: cat1, cat2, cat3, cat4.

    cat1 (8 classes) is authored in code; cat2 (56), cat3 (86) and
    cat4 (122, rep-aware) ship as best-effort data files.
    """
    which = which.lower()
    if which == "cat1":
        return _cat1_map()
    if which in ("cat2", "cat3", "cat4"):
        ref = importlib.resources.files("mctrace.data").joinpath(f"{which}.map")
        lines = ref.read_text(encoding="utf-8").splitlines()
        return parse_category_map(lines, categorization_id=which)
    raise InvalidParameterError(f"unknown categorization {which!r}")


@dataclass
class InstructionSequence:
    """Category indices of a parsed trace, in execution order."""

    categories: np.ndarray
    source_id: str = ""

    @property
    def m(self) -> int:
        return len(self.categories)


def split_mnemonic(line: str) -> tuple[str, str | None] | None:
    """First (mnemonic, rep-prefix) of a trace line, or None to skip it."""
    tokens = line.split()
    if not tokens:
        return None
    pos = 0
    while pos < len(tokens) and tokens[pos].lower() in DROP_PREFIXES:
        pos += 1
    if pos >= len(tokens):
        return None
    first = tokens[pos].lower().rstrip(",")
    rep = REP_PREFIXES.get(first)
    if rep is not None and pos + 1 < len(tokens):
        return tokens[pos + 1].lower().rstrip(","), rep
    return first, None


def parse_trace(stream, cmap: CategoryMap, source_id: str = "") -> InstructionSequence:
    """Parse a line-oriented trace stream into category indices.

    ``stream`` is any iterable of text lines (an open file works).
    Unknown mnemonics map to the fallback category; blank lines and
    ``#`` comments are skipped.
    """
    cats = []
    try:
        for raw in stream:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parsed = split_mnemonic(line)
            if parsed is None:
                continue
            mnemonic, rep = parsed
            cats.append(cmap.lookup(mnemonic, rep))
    except UnicodeDecodeError as exc:
        raise TraceIOError(f"trace stream is not valid UTF-8 text: {exc}") from exc
    except OSError as exc:
        raise TraceIOError(f"error reading trace stream: {exc}") from exc
    return InstructionSequence(np.asarray(cats, dtype=np.int64), source_id=source_id)


def parse_trace_file(path, cmap: CategoryMap) -> InstructionSequence:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", errors="strict") as fh:
            return parse_trace(fh, cmap, source_id=str(path))
    except OSError as exc:
        raise TraceIOError(f"cannot read trace {path}: {exc}") from exc


def iter_category_chunks(stream, cmap: CategoryMap, chunk_size: int = 1024):
    """Yield arrays of category indices as lines arrive (for live monitoring)."""
    buf = []
    for raw in stream:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parsed = split_mnemonic(line)
        if parsed is None:
            continue
        mnemonic, rep = parsed
        buf.append(cmap.lookup(mnemonic, rep))
        if len(buf) >= chunk_size:
            yield np.asarray(buf, dtype=np.int64)
            buf = []
    if buf:
        yield np.asarray(buf, dtype=np.int64)


@dataclass
class TransitionCounts:
    """Matrix of adjacent category-pair counts for one trace."""

    matrix: np.ndarray
    m: int = 0
    source_id: str = ""

    @property
    def n_categories(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def zeros(cls, n_categories: int, source_id: str = "") -> "TransitionCounts":
        return cls(np.zeros((n_categories, n_categories), dtype=np.int64), 0, source_id)

    def validate(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise InvalidInputError("transition counts must be a square matrix")
        if (self.matrix < 0).any():
            raise InvalidInputError("transition counts must be nonnegative")
        total = int(self.matrix.sum())
        if total != max(self.m - 1, 0):
            raise InvalidInputError(
                f"count total {total} does not match m={self.m} (expected {max(self.m - 1, 0)})"
            )


def count_transitions(seq, n_categories: int) -> TransitionCounts:
    """Count adjacent category pairs in one pass over a sequence."""
    if isinstance(seq, InstructionSequence):
        cats = seq.categories
        source_id = seq.source_id
    else:
        cats = np.asarray(seq, dtype=np.int64)
        source_id = ""
    if cats.size and (cats.min() < 0 or cats.max() >= n_categories):
        raise InvalidInputError(
            f"category index out of range [0, {n_categories}) in sequence"
        )
    Z = np.zeros((n_categories, n_categories), dtype=np.int64)
    if cats.size >= 2:
        np.add.at(Z, (cats[:-1], cats[1:]), 1)
    return TransitionCounts(Z, int(cats.size), source_id)


def update_counts(counts: TransitionCounts, next_category: int,
                  prev_category: int | None = None) -> TransitionCounts:
    """Fold one instruction into running counts (updated in place).

    Equivalent to recomputing ``count_transitions`` on the extended
    sequence when ``prev_category`` is the previously consumed category
    (None for the first instruction).
    """
    c = counts.n_categories
    if not 0 <= next_category < c:
        raise InvalidInputError(f"category {next_category} out of range [0, {c})")
    if prev_category is not None:
        if not 0 <= prev_category < c:
            raise InvalidInputError(f"category {prev_category} out of range [0, {c})")
        counts.matrix[prev_category, next_category] += 1
    counts.m += 1
    return counts


def read_manifest(path) -> list[tuple[Path, int]]:
    """Read a dataset manifest: lines of ``<trace-path> <label 0|1>``.

    Relative trace paths are resolved against the manifest's directory.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise TraceIOError(f"cannot read manifest {path}: {exc}") from exc
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.rsplit(None, 1)
        if len(parts) != 2 or parts[1] not in ("0", "1"):
            raise InvalidInputError(
                f"{path}:{lineno}: expected '<trace-path> <label 0|1>', got {line!r}"
            )
        trace = Path(parts[0])
        if not trace.is_absolute():
            trace = path.parent / trace
        out.append((trace, int(parts[1])))
    return out


def filter_training(dataset, min_length: int = MIN_TRAIN_LENGTH):
    """Split (counts, label) pairs into (kept, excluded) by trace length."""
    kept, excluded = [], []
    for counts, label in dataset:
        (kept if counts.m >= min_length else excluded).append((counts, label))
    return kept, excluded
