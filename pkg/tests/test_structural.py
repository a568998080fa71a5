import random

from hypothesis import given, settings
from hypothesis import strategies as st

from desdiag.automata import Alphabet, Automaton, Event, ModularSystem, Module, fault_split
from desdiag.diagnosability import all_diagnosable, check_virtual
from desdiag.partition import Partition
from desdiag.structural import (
    analyze_pair, build_l1_marker, build_l2_marker, support_check, trigger_events,
)

import oracles
from randsys import random_system
from structural_cases import CASES, G1, G2, _a

SIGMA1 = Alphabet.of("a b c:o f:f")
SIGMA2 = Alphabet.of("b c:o e:o")

EVENT_POOL = {"a": Event("a"), "b": Event("b", True), "c": Event("c", True),
              "d": Event("d"), "e": Event("e", True), "f": Event("f", fault=True)}


def pair_truth(faulty, cand):
    sys_ = ModularSystem((Module(faulty.name, faulty), Module(cand.name, cand)))
    return all_diagnosable(check_virtual(sys_, Partition.coarsest(sys_)))


# markers

def test_l1_marker_example():
    m = build_l1_marker(SIGMA1, SIGMA2)
    assert m.automaton.n_states == 3 and m.automaton.marked == frozenset({2})
    assert m.edge_classes() == {
        (0, 0): {"a", "f"}, (0, 1): {"b", "c"},
        (1, 1): {"a", "f"}, (1, 2): {"b", "c"},
        (2, 2): {"a", "b", "c", "f"},
    }


def test_l1_marker_disjoint_alphabets():
    m = build_l1_marker(SIGMA1, Alphabet.of("x y"))
    assert (0, 1) not in m.edge_classes()
    assert not any(m.automaton.run(w) == 2 for w in oracles.strings(m.automaton, 4))


def test_l1_marker_equal_alphabets():
    m = build_l1_marker(SIGMA1, SIGMA1)
    classes = m.edge_classes()
    assert (0, 0) not in classes and (1, 1) not in classes
    for w in oracles.strings(m.automaton, 4):
        assert (m.automaton.run(w) == 2) == (len(w) >= 2)


def test_l2_marker_example():
    m = build_l2_marker(SIGMA1, SIGMA2)
    assert m.automaton.n_states == 4 and m.automaton.marked == frozenset({3})
    assert m.edge_classes() == {
        (0, 0): {"e"}, (0, 1): {"b", "c"},
        (1, 1): {"b", "c"}, (1, 2): {"e"},
        (2, 2): {"e"}, (2, 3): {"b", "c"},
        (3, 3): {"b", "c", "e"},
    }


def test_l2_marker_without_private_observables():
    m = build_l2_marker(SIGMA1, Alphabet.of("b c:o"))
    assert (1, 2) not in m.edge_classes()


def test_l2_marker_disjoint_alphabets():
    m = build_l2_marker(SIGMA1, Alphabet.of("x:o"))
    assert (0, 1) not in m.edge_classes()


def test_l2_marker_entry_and_exit_narrowing():
    m = build_l2_marker(SIGMA1, SIGMA2, entry={"b"}, exit={"c"})
    classes = m.edge_classes()
    assert classes[(0, 1)] == {"b"} and classes[(2, 3)] == {"c"}
    assert classes[(0, 0)] == {"c", "e"} and classes[(2, 2)] == {"b", "e"}


@settings(max_examples=80, deadline=None)
@given(st.sets(st.sampled_from("abcdef"), min_size=1), st.sets(st.sampled_from("abcde"),
                                                                 min_size=1))
def test_marker_shapes(names1, names2):
    s1 = Alphabet(tuple(EVENT_POOL[n] for n in sorted(names1)))
    s2 = Alphabet(tuple(EVENT_POOL[n] for n in sorted(names2)))
    common = names1 & names2
    private_obs = set(s2.observable) - names1

    l1 = build_l1_marker(s1, s2).edge_classes()
    want1 = {(0, 1): common, (1, 2): common, (0, 0): names1 - common,
             (1, 1): names1 - common, (2, 2): names1}
    assert l1 == {k: v for k, v in want1.items() if v}

    l2 = build_l2_marker(s1, s2).edge_classes()
    want2 = {(0, 1): common, (1, 2): private_obs, (2, 3): common,
             (0, 0): names2 - common, (2, 2): names2 - common,
             (1, 1): names2 - private_obs, (3, 3): names2}
    assert l2 == {k: v for k, v in want2.items() if v}


# trigger events

def test_trigger_events_example():
    res = trigger_events(fault_split(G1), SIGMA2)
    assert res.trigger == {"b"} and res.confirm == {"c"} and res.marked_any
    assert res.example == ("f", "b", "c")


def test_trigger_events_nothing_shared():
    res = trigger_events(fault_split(G1), Alphabet.of("x:o"))
    assert not res.trigger and not res.marked_any


def test_single_shared_occurrence_is_not_marked():
    # faulty continuation f b u*: exactly one shared event (b)
    faulty = _a("b:o u f:f", ["0 f 1", "1 b 2", "2 u 2"], "one")
    res = trigger_events(fault_split(faulty), Alphabet.of("b:o e:o"))
    assert res.trigger == {"b"} and not res.confirm and not res.marked_any


def test_common_prefixes_are_excluded():
    # c is shared but only ever happens before the fault, on the normal path too
    faulty = _a("c:o b:o f:f", ["0 c 0", "0 f 1", "1 b 1"], "pre")
    res = trigger_events(fault_split(faulty), Alphabet.of("b:o c:o"))
    assert res.trigger == {"b"} and res.confirm == {"b"}


# support check

def test_support_example():
    res = support_check(G2, {"b"}, {"c"}, faulty_alphabet=SIGMA1)
    assert res.ok and res.kind == "accepted" and res.witness == ("b", "e", "c")


def test_support_needs_private_observables():
    cand = _a("b c:o", ["0 b 1", "0 c 0", "1 c 1"], "noobs")
    res = support_check(cand, {"b"}, {"c"}, faulty_alphabet=SIGMA1)
    assert not res.ok


def test_support_without_trigger():
    res = support_check(G2, set(), set(), faulty_alphabet=SIGMA1)
    assert not res.ok and res.kind == "no-trigger"


def test_silent_cycle_after_trigger():
    cand = CASES["silent_after_trigger"][1]
    res = support_check(cand, {"b"}, {"c"}, faulty_alphabet=SIGMA1)
    assert not res.ok and res.kind == "silent-cycle"
    assert res.path == ("b",) and res.cycle == ("c",)
    # ground truth agrees: the composition stays non-diagnosable
    assert not pair_truth(G1, cand)


def test_dead_end_after_trigger():
    cand = CASES["dead_end_after_support"][1]
    res = support_check(cand, {"b"}, {"c"}, faulty_alphabet=SIGMA1)
    assert not res.ok and res.kind == "dead-end"


# analyze_pair

def test_analyze_example_pair():
    rep = analyze_pair(Module("g1", G1), Module("g2", G2))
    assert rep.recommended and rep.verdict == "recommend"
    assert rep.common_events == ("b", "c")
    assert rep.trigger_events == ("b",) and rep.confirm_events == ("c",)
    assert rep.support_witness == ("b", "e", "c")
    assert pair_truth(G1, G2)


def test_analyze_faultless_copy():
    rep = analyze_pair(Module("g1", G1), Module("copy", CASES["faultless_copy"][1]))
    assert rep.verdict == "reject"


def test_analyze_disjoint_candidate():
    rep = analyze_pair(Module("g1", G1), Module("d", CASES["disjoint_alphabet"][1]))
    assert rep.verdict == "reject" and rep.common_events == ()


def test_report_json_round_trips_fields():
    doc = analyze_pair(Module("g1", G1), Module("g2", G2)).to_json()
    assert doc["verdict"] == "recommend" and doc["trigger_events"] == ["b"]
    assert doc["support_witness"] == ["b", "e", "c"]


def test_curated_cases():
    for name, (faulty, cand, verdict, truth) in CASES.items():
        rep = analyze_pair(Module(faulty.name, faulty), Module(cand.name, cand))
        assert rep.verdict == verdict, name
        assert pair_truth(faulty, cand) == truth, name
        assert rep.recommended <= truth, name
        assert rep.recommended == (rep.marked_any and rep.support_ok), name


def test_strict_mode_catches_noisy_candidate():
    # e can also happen on the normal path, so it does not separate anything
    noisy = _a("b c:o e:o", ["0 b 1", "0 c 0", "0 e 0", "1 e 2", "2 c 2"], "noisy")
    assert not pair_truth(G1, noisy)
    assert analyze_pair(Module("g1", G1), Module("noisy", noisy)).recommended
    strict = analyze_pair(Module("g1", G1), Module("noisy", noisy), strict=True)
    assert strict.verdict == "reject" and not strict.strict_ok


def test_strict_mode_on_example_pair():
    # the normal strings a c* share only c, which G2 can repeat silently
    rep = analyze_pair(Module("g1", G1), Module("g2", G2), strict=True)
    assert rep.strict and not rep.strict_ok and rep.verdict == "reject"
    assert rep.support_ok and rep.marked_any


def test_confusion_matrix_is_reproducible():
    a = oracles.confusion_matrix(range(60))
    b = oracles.confusion_matrix(range(60))
    assert a == b
    cells = a["default"]
    assert sum(cells.values()) == a["considered"]
    # strict mode never recommends more than default mode
    assert a["strict"]["tp"] + a["strict"]["fp"] <= cells["tp"] + cells["fp"]


def test_reports_are_deterministic():
    rng = random.Random(7)
    for _ in range(20):
        seed = rng.randrange(10_000)
        sys_ = random_system(random.Random(seed), n_modules=2)
        f, c = sys_.modules
        assert analyze_pair(f, c) == analyze_pair(f, c)
