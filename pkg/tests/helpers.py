"""Shared builders for the test suite: small hand-made automata, random
trace generation, and a seeded generator of valid policy documents."""

from __future__ import annotations

import random
from pathlib import Path

from proactive.automata import (
    ActionSymbol,
    ArgSource,
    EditAutomaton,
    Event,
    Guard,
    Kind,
    OutputItem,
    Trace,
    Transition,
)
from proactive.dsl import PolicyDoc

FIXTURES = Path(__file__).parent / "fixtures"

DOA = ActionSymbol.call("Api", "doA")
DOB = ActionSymbol.call("Api", "doB")
DOC = ActionSymbol.call("Api", "doC")
DOX = ActionSymbol.call("Api", "doX")

NEW_AR = ActionSymbol.constructor("AudioRecord")
START_REC = ActionSymbol.call("AudioRecord", "startRecording")
STOP_REC = ActionSymbol.call("AudioRecord", "stop")
RELEASE_AR = ActionSymbol.call("AudioRecord", "release")
ON_STOP = ActionSymbol.callback("onStop")

fwd = OutputItem.forward
synth = OutputItem.synthesize


def make_doc(name: str, automaton: EditAutomaton,
             target: str = "Api", **kwargs) -> PolicyDoc:
    return PolicyDoc(name=name, statement=f"test policy {name}",
                     target_interface=target, automaton=automaton, **kwargs)


def substitution_automaton() -> EditAutomaton:
    """Two-state transducer: in state 0 every doA becomes doX; any other
    vocabulary event forwards and flips to state 1, where doA becomes
    doA followed by doX."""
    other = Guard.any_of([DOB, DOC, DOX])
    return EditAutomaton(
        states=frozenset({"0", "1"}),
        initial="0",
        transitions=(
            Transition("0", Guard.exactly(DOA), (synth(DOX),), "0"),
            Transition("0", other, (fwd(),), "1"),
            Transition("1", Guard.exactly(DOA), (fwd(), synth(DOX)), "1"),
            Transition("1", other, (fwd(),), "0"),
        ),
    )


def forced_release_automaton() -> EditAutomaton:
    """Three-state AudioRecord model: acquisition, recording, and the
    forced stop/release on onStop while recording."""
    return EditAutomaton(
        states=frozenset({"0", "1", "2"}),
        initial="0",
        transitions=(
            Transition("0", Guard.any_except([NEW_AR]), (fwd(),), "0"),
            Transition("0", Guard.exactly(NEW_AR), (fwd(),), "1"),
            Transition("1", Guard.any_except([START_REC, RELEASE_AR]),
                       (fwd(),), "1"),
            Transition("1", Guard.exactly(RELEASE_AR), (fwd(),), "0"),
            Transition("1", Guard.exactly(START_REC), (fwd(),), "2"),
            Transition("2", Guard.any_except([RELEASE_AR, STOP_REC, ON_STOP]),
                       (fwd(),), "2"),
            Transition("2", Guard.exactly(RELEASE_AR), (fwd(),), "0"),
            Transition("2", Guard.exactly(STOP_REC), (fwd(),), "1"),
            Transition("2", Guard.exactly(ON_STOP),
                       (synth(STOP_REC), synth(RELEASE_AR), fwd()), "0"),
        ),
    )


def event_shapes(events) -> list[tuple]:
    """Seq-insensitive comparison key for event sequences."""
    return [(e.symbol, e.origin, e.args, e.instance) for e in events]


def random_trace(rng: random.Random, vocabulary, max_len: int = 50,
                 extra=()) -> Trace:
    symbols = sorted(vocabulary, key=str) + list(extra)
    events = []
    for _ in range(rng.randint(0, max_len)):
        symbol = rng.choice(symbols)
        args = (tuple(rng.randint(0, 9) for _ in range(3))
                if symbol.kind is Kind.CONSTRUCTOR else ())
        events.append(Event(symbol=symbol, args=args))
    return Trace.of(events)


# -- random valid PolicyDoc generation ----------------------------------

_SYMBOL_POOL = (
    ActionSymbol.call("Api", "doA"),
    ActionSymbol.call("Api", "doB"),
    ActionSymbol.call("Other", "go"),
    ActionSymbol.callback("onThing"),
    ActionSymbol.constructor("Api"),
)

_STATEMENT_CHARS = 'abc XY.,:#"()\\{}'


def _random_template(rng: random.Random) -> tuple[OutputItem, ...]:
    def one():
        source = rng.choice(list(ArgSource))
        literals = ()
        if source is ArgSource.LITERALS:
            literals = tuple(
                rng.choice([rng.randint(-99, 99),
                            "".join(rng.choices(_STATEMENT_CHARS, k=4))])
                for _ in range(rng.randint(0, 3)))
        return synth(rng.choice(_SYMBOL_POOL), source, literals)

    shape = rng.randrange(6)
    if shape == 0:
        return (fwd(),)
    if shape == 1:
        return ()
    if shape == 2:
        return (one(), fwd())
    if shape == 3:
        return (fwd(), one())
    if shape == 4:
        return (one(),)
    return (one(), one(), fwd())


def random_policy_doc(seed: int) -> PolicyDoc:
    """A valid-by-construction random PolicyDoc: per state, a few
    Exactly transitions over distinct symbols plus one catch-all, which
    guarantees determinism and completeness however the vocabulary grows
    from synthesized symbols."""
    rng = random.Random(seed)
    states = [str(i) for i in range(rng.randint(1, 4))]
    transitions = []
    for state in states:
        listed = rng.sample(_SYMBOL_POOL, rng.randint(0, 3))
        for symbol in listed:
            transitions.append(Transition(state, Guard.exactly(symbol),
                                          _random_template(rng),
                                          rng.choice(states)))
        catch_all = Guard.any() if not listed else Guard.any_except(listed)
        transitions.append(Transition(state, catch_all, (fwd(),),
                                      rng.choice(states)))
    automaton = EditAutomaton(frozenset(states), states[0], tuple(transitions))
    statement = "".join(rng.choices(_STATEMENT_CHARS + "\n",
                                    k=rng.randint(0, 40)))
    return PolicyDoc(
        name=f"generated-{seed}",
        statement=statement,
        target_interface=rng.choice(["Api", "Other"]),
        automaton=automaton,
        version=rng.randint(0, 3),
        experimental=rng.random() < 0.3,
    )
