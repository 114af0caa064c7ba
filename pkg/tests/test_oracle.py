from premiseguard.oracle import OracleChat, judge
from premiseguard.logiform import extraction_prompt
from premiseguard.verdict import direct_prompt

ctx = [["The Dark Knight", "award received", "81st Academy Awards"]]


def test_judge_logical_form():
    assert judge('award_received("The Dark Knight", "Golden Globe")', ctx)
    assert not judge('award_received("The Dark Knight", "81st Academy Awards")', ctx)
    assert not judge('director("The Dark Knight", "Someone")', ctx)
    assert judge('[MASK]("The Dark Knight", "Golden Globe")', ctx)
    assert not judge('award_received("[MASK]", "Golden Globe")', ctx)
    assert not judge('award_received("The Dark Knight", "[MASK]")', ctx)


def test_judge_free_text():
    assert judge("Did The Dark Knight win the Golden Globe?", ctx)
    assert not judge("Did The Dark Knight win the 81st Academy Awards?", ctx)
    assert not judge("Did Memento win anything?", ctx)


def test_oracle_prompt_dispatch():
    o = OracleChat({"Q": "P(a)"})
    assert o.complete(extraction_prompt("Q")).endswith("Logical form: P(a)")
    assert "could not" in o.complete(extraction_prompt("other"))
    assert o.complete(direct_prompt("Q")) == "No"
    assert o.complete("Q Note: This question contains a false premise.").startswith("No")
    assert o.complete("Q") == "Yes."
