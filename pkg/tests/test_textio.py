import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpv.harness import quadratic, random_spec, reader_writer, toy_disjunctive
from gpv.model import Configuration, ExplicitState, Kind, RunRep
from gpv.textio import (
    ParseError,
    parse_protocol,
    render_report,
    render_source,
    run_from_json,
    run_to_json,
)

RW_SOURCE = """\
system conjunctive
template B {
  states: init, tr, r, tw, w;
  init: init;
  trans init -> tr;
  trans tr -> r [not w];
  trans r -> init;
  trans init -> tw;
  trans tw -> w [not w & not r];
  trans w -> init;
}
"""


def test_reader_writer_source():
    spec = parse_protocol(RW_SOURCE)
    assert spec.kind == Kind.CONJUNCTIVE
    assert spec.B.size == 5
    assert len({t.guard for t in spec.B.transitions if not t.guard.trivial}) == 2
    assert spec == reader_writer()


def test_guard_excluding_init_is_rejected():
    src = RW_SOURCE.replace("[not w];", "[not init];")
    with pytest.raises(ParseError, match="init"):
        parse_protocol(src)


def test_empty_template_is_rejected():
    with pytest.raises(ParseError, match="must declare at least init"):
        parse_protocol("system conjunctive\ntemplate B {\n}\n")


def test_unknown_state_reports_position():
    src = RW_SOURCE.replace("trans r -> init;", "trans r -> nowhere;")
    with pytest.raises(ParseError) as info:
        parse_protocol(src)
    assert info.value.line == 7


def test_garbage_is_rejected():
    with pytest.raises(ParseError):
        parse_protocol("bogus")


@pytest.mark.parametrize("spec", [reader_writer(), reader_writer(True), quadratic(4, 2), toy_disjunctive()])
def test_examples_round_trip(spec):
    assert parse_protocol(render_source(spec)) == spec


@pytest.mark.parametrize("seed", range(100))
def test_corpus_round_trip(seed):
    kind = ("disjunctive", "conjunctive", "conjdisj")[seed % 3]
    spec = random_spec(seed, kind, states=3 + seed % 3, with_a=seed % 2 == 0)
    text = render_source(spec)
    again = parse_protocol(text)
    assert again == spec
    assert render_source(again) == text


def test_empty_report_skeleton():
    assert json.loads(render_report({})) == {"analysis": {}, "cutoffs": [], "verdicts": [], "timings": {}}


def test_report_mentions_reader_writer_cutoff():
    from gpv.cutoff import comparison_table

    rows = json.loads(render_report({"cutoffs": [r.to_json() for r in comparison_table(reader_writer())]}))["cutoffs"]
    ld = [r for r in rows if r["query"] == "local-deadlock" and r["fairness"] == "strong"]
    assert ld and ld[0]["new"] == 5


names = st.sampled_from(["init", "tr", "r", "tw", "w"])


@st.composite
def runs(draw):
    n = draw(st.integers(1, 4))
    state = st.builds(lambda a, bs: ExplicitState(a, tuple(bs)), st.sampled_from(["a0", "a1"]),
                      st.lists(names, min_size=n, max_size=n))
    conf = st.builds(Configuration, state, st.just(()), st.one_of(st.none(), st.integers(0, n)))
    stem = draw(st.lists(conf, min_size=1, max_size=6))
    loop = draw(st.lists(conf, max_size=4))
    return RunRep(n, tuple(stem), tuple(loop))


@settings(max_examples=200)
@given(runs())
def test_witness_json_round_trip(run):
    data = json.loads(json.dumps(run_to_json(run)))
    assert run_from_json(data) == run
