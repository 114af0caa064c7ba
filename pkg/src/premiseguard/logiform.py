"""Logical forms: extraction from a chat model, parsing, canonical text, masking.

The accepted grammar is a single atomic predicate::

    Pred ( Arg {, Arg} )

where each ``Arg`` is a single- or double-quoted string (commas and parentheses
are fine inside quotes, backslash escapes the quote character) or a bare run of
characters without commas or parentheses.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Literal

from .errors import MissingComponent, ParseError

if TYPE_CHECKING:
    from .providers import ChatProvider

log = logging.getLogger(__name__)

EXTRACTION_PROMPT = (
    "You are given a question. The task is to: 1) define all the predicates used in the "
    "question. 2) parse the question into logic rules based on the defined predicates 3) "
    "translate any logical rules implied by the question. 4) convert the question into a "
    "logical form using predicate logic. Provide your final answer in the following format: "
    "Logical form: Predicate1(entity1, entity2). Keep all expressions concise and consistent. "
    "Use standard predicate logic notation."
)

MASK = "[MASK]"
DEFAULT_RETRIES = 2

_QUOTES = "\"'"
_ANSWER_LINE = re.compile(r"logical\s+form\s*[:：]\s*(.*)$", re.IGNORECASE)


@dataclass(frozen=True)
class LogicalForm:
    predicate: str
    args: tuple[str, ...]
    # provider text the form was read from; not part of identity
    raw: str = field(default="", compare=False)

    def __post_init__(self):
        pred = self.predicate.strip()
        if not pred:
            raise ValueError("predicate must be non-empty")
        if any(c in pred for c in "(),"):
            raise ValueError(f"predicate {pred!r} contains parentheses or commas")
        args = tuple(self.args)
        if not args:
            raise ValueError("a logical form needs at least one argument")
        for a in args:
            if not a.strip():
                raise ValueError("arguments must be non-empty")
        object.__setattr__(self, "predicate", pred)
        object.__setattr__(self, "args", args)

    def __str__(self) -> str:
        return serialize_canonical(self)


@dataclass(frozen=True)
class TripleQuery:
    source: str
    relation: str
    target: str | None = None


def _read_quoted(s: str, i: int) -> tuple[str, int]:
    quote = s[i]
    i += 1
    out = []
    while i < len(s):
        c = s[i]
        if c == "\\" and i + 1 < len(s) and s[i + 1] in (quote, "\\", '"', "'"):
            out.append(s[i + 1])
            i += 2
            continue
        if c == quote:
            return "".join(out), i + 1
        out.append(c)
        i += 1
    raise ParseError("unterminated quoted argument", s)


def _parse(text: str, strict: bool) -> LogicalForm:
    s = text.strip()
    open_at = s.find("(")
    if open_at < 0:
        raise ParseError("no opening parenthesis", text)
    predicate = s[:open_at].strip()
    if not predicate:
        raise ParseError("empty predicate", text)
    if any(c in predicate for c in "),"):
        raise ParseError(f"bad predicate {predicate!r}", text)

    args: list[str] = []
    i = open_at + 1
    n = len(s)
    while True:
        while i < n and s[i].isspace():
            i += 1
        if i >= n:
            raise ParseError("unbalanced parentheses", text)
        if s[i] == ")" and not args:
            raise ParseError("zero arguments", text)
        if s[i] in _QUOTES:
            arg, i = _read_quoted(s, i)
            if not arg.strip():
                raise ParseError("empty argument", text)
            while i < n and s[i].isspace():
                i += 1
        else:
            start = i
            while i < n and s[i] not in ",()":
                i += 1
            if i < n and s[i] == "(":
                raise ParseError("nested parentheses in a bare argument", text)
            arg = s[start:i].strip()
            if not arg:
                raise ParseError("empty argument", text)
        args.append(arg)
        if i >= n:
            raise ParseError("unbalanced parentheses", text)
        if s[i] == ",":
            i += 1
            continue
        if s[i] == ")":
            i += 1
            break
        raise ParseError(f"unexpected {s[i]!r} after argument", text)

    rest = s[i:].strip()
    if strict and rest not in ("", "."):
        raise ParseError(f"trailing text {rest!r}", text)
    if rest not in ("", "."):
        log.warning("ignoring text after the first assertion: %r", rest)
    return LogicalForm(predicate, tuple(args), raw=text)


def parse_logical_form(text: str, strict: bool = True) -> LogicalForm:
    """Parse one ``Pred(arg, ...)`` expression.

    With ``strict=False`` anything after the first complete assertion is
    ignored (only the first assertion of a multi-clause answer is kept).
    """
    return _parse(text, strict)


def _candidate_lines(response: str) -> list[str]:
    lines = response.splitlines()
    found = []
    for idx, line in enumerate(lines):
        m = _ANSWER_LINE.search(line.strip().strip("*#>").replace("**", ""))
        if not m:
            continue
        body = m.group(1).strip()
        if not body and idx + 1 < len(lines):
            body = lines[idx + 1].strip()
        body = body.strip("`*").strip()
        if body:
            found.append(body)
    # the final-answer line comes last; earlier hits are usually format echoes
    return found[::-1]


def read_logical_form(response: str) -> LogicalForm:
    """Pull the form out of a full provider response (``Logical form: ...`` line)."""
    for body in _candidate_lines(response):
        try:
            lf = _parse(body, strict=False)
        except ParseError:
            continue
        return replace(lf, raw=response)
    raise ParseError("no 'Logical form:' line with a parseable form", response)


def extraction_prompt(query: str) -> str:
    return f"{EXTRACTION_PROMPT}\nQuestion: {query}"


def extract_logical_form(
    query: str, provider: ChatProvider, retries: int = DEFAULT_RETRIES
) -> LogicalForm:
    """Ask the chat model for the logical form of ``query``.

    The identical prompt is resent up to ``retries`` more times when the answer
    cannot be parsed. Each retry carries its attempt number so cached and
    scripted replays stay deterministic.

    Raises:
        ParseError: if no attempt produced a parseable form; ``raw`` holds the
            last response.
    """
    if not query.strip():
        raise ValueError("query must be non-empty")
    prompt = extraction_prompt(query)
    last = ""
    for attempt in range(retries + 1):
        last = provider.complete(prompt, temperature=0.0, top_p=1.0, nonce=attempt)
        try:
            return read_logical_form(last)
        except ParseError:
            log.info("logical form attempt %d unparseable for %r", attempt + 1, query)
    raise ParseError(f"no parseable logical form after {retries + 1} attempts", last)


def to_triple_query(lf: LogicalForm) -> TripleQuery:
    if len(lf.args) > 2:
        log.warning("dropping %d argument(s) beyond the second in %s", len(lf.args) - 2, lf)
    target = lf.args[1] if len(lf.args) > 1 else None
    return TripleQuery(source=lf.args[0], relation=lf.predicate, target=target)


Component = Literal["relation", "entity1", "entity2"]


def mask_component(lf: LogicalForm, which: Component) -> LogicalForm:
    if which == "relation":
        return replace(lf, predicate=MASK)
    pos = {"entity1": 0, "entity2": 1}.get(which)
    if pos is None:
        raise ValueError(f"unknown component {which!r}")
    if len(lf.args) <= pos:
        raise MissingComponent(f"{which} not present in {lf}")
    args = list(lf.args)
    args[pos] = MASK
    return replace(lf, args=tuple(args))


def _quote(arg: str) -> str:
    return '"' + arg.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_canonical(lf: LogicalForm) -> str:
    return f"{lf.predicate}({', '.join(_quote(a) for a in lf.args)})"
