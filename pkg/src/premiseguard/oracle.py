"""A rule-based stand-in for the chat model, for offline experiments.

It recognizes each prompt the pipeline sends and answers the way a
well-behaved model would if it could read the evidence literally:

- extraction prompts are answered from a question -> logical form table;
- detection prompts say "Yes" only when a context triple has the queried
  subject and relation but a different object;
- plain answer prompts accept the premise ("Yes") unless the false-premise
  note is present, which mirrors the failure mode the note is meant to fix.

Masked components are honoured: a masked relation matches any relation, a
masked entity matches nothing.
"""

from __future__ import annotations

import ast
from typing import Mapping

from .errors import ParseError
from .kgraph import normalize_surface
from .logiform import EXTRACTION_PROMPT, MASK, parse_logical_form, to_triple_query
from .mitigate import FALSE_PREMISE_NOTE, RAG_TEMPLATE
from .providers import ChatProvider, ChatRequest, tokenize
from .retrieve import score_prompt_template
from .verdict import DETECTION_TEMPLATE, DIRECT_PROMPT

_DETECT_HEAD = DETECTION_TEMPLATE.split("[context]")[0]
_RAG_HEAD = RAG_TEMPLATE.split("[context]")[0]
_SCORE_HEAD = score_prompt_template().split("[query]")[0]


def _rel(s: str) -> str:
    return normalize_surface(s.replace("_", " "))


def _contains(haystack: list[str], needle: list[str]) -> bool:
    n = len(needle)
    return n > 0 and any(haystack[i:i + n] == needle for i in range(len(haystack) - n + 1))


def _triples(context: str) -> list[list[str]]:
    out = []
    for line in context.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            t = ast.literal_eval(line)
        except (ValueError, SyntaxError):
            continue
        if isinstance(t, (list, tuple)) and len(t) == 3:
            out.append([str(x) for x in t])
    return out


def judge(query: str, triples: list[list[str]]) -> bool:
    """True when the context contradicts the query's premise."""
    try:
        tq = to_triple_query(parse_logical_form(query))
    except ParseError:
        tq = None

    if tq is not None:
        src = None if tq.source == MASK else normalize_surface(tq.source)
        tgt = None if tq.target in (None, MASK) else normalize_surface(tq.target)
        rel = None if tq.relation == MASK else _rel(tq.relation)
        entailed = conflict = False
        for s, r, o in triples:
            if src is None or normalize_surface(s) != src:
                continue
            if rel is not None and _rel(r) != rel:
                continue
            if tgt is None:
                continue
            if normalize_surface(o) == tgt:
                entailed = True
            else:
                conflict = True
        return conflict and not entailed

    words = tokenize(query)
    entailed = conflict = False
    for s, _r, o in triples:
        if not _contains(words, tokenize(s)):
            continue
        if _contains(words, tokenize(o)):
            entailed = True
        else:
            conflict = True
    return conflict and not entailed


class OracleChat(ChatProvider):
    backend_id = "oracle"

    def __init__(self, logical_forms: Mapping[str, str] | None = None, model: str = "oracle"):
        super().__init__(model)
        self.logical_forms = dict(logical_forms or {})

    def _send(self, req: ChatRequest) -> str:
        p = req.prompt
        if p.startswith(EXTRACTION_PROMPT):
            question = p.split("\nQuestion: ", 1)[-1].strip()
            lf = self.logical_forms.get(question)
            if lf is None:
                return "I could not translate this question."
            return f"The question asserts a single relation.\nLogical form: {lf}"
        if p.startswith(_DETECT_HEAD):
            body = p[len(_DETECT_HEAD):]
            context, _, rest = body.rpartition(". Query: ")
            query = rest[:-1] if rest.endswith(".") else rest
            return "Yes" if judge(query, _triples(context)) else "No"
        if p.startswith(DIRECT_PROMPT):
            return "No"
        if p.startswith(_SCORE_HEAD):
            lines = p.splitlines()
            query = lines[1].removeprefix("Question: ")
            triple = lines[2].removeprefix("Candidate triple: ")
            q, t = set(tokenize(query)), set(tokenize(" ".join(_triples(triple)[0]) if _triples(triple) else triple))
            return str(round(100 * len(q & t) / len(q | t))) if q | t else "0"
        if p.startswith(_RAG_HEAD):
            body = p[len(_RAG_HEAD):]
            context, _, question = body.rpartition("\nQuestion: ")
            if judge(question, _triples(context)):
                return "No, the context contradicts the premise of this question."
            return "Yes."
        if FALSE_PREMISE_NOTE in p:
            return "No, the question rests on a false premise."
        return "Yes."
