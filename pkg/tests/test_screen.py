import dataclasses

import pytest

from mtc.fixtures import ANOMALY_FIXTURES, FORK_HISTORY
from mtc.history import History, Status, Transaction, r, w
from mtc.screen import AnomalyInstance, AnomalyKind, screen, verify_instance

PREFLIGHT = [f for f in ANOMALY_FIXTURES if f.screen]
INTER = [f for f in ANOMALY_FIXTURES if not f.screen]


@pytest.mark.parametrize("fx", PREFLIGHT, ids=lambda f: f.name)
def test_fixture_yields_exactly_its_anomaly(fx):
    found = screen(fx.history)
    assert [a.kind.value for a in found] == [fx.screen]
    assert all(verify_instance(fx.history, a) for a in found)


@pytest.mark.parametrize("fx", INTER, ids=lambda f: f.name)
def test_inter_transactional_fixtures_pass_screen(fx):
    assert screen(fx.history) == []


def test_fork_shape_is_clean():
    assert screen(FORK_HISTORY) == []


def test_thin_air_value():
    h = History([Transaction(1, "s", (r("x", 0), w("x", 1))), Transaction(2, "s", (r("x", 99),))])
    [a] = screen(h)
    assert a == AnomalyInstance(AnomalyKind.THIN_AIR_READ, (2,), "x", 99, (0,))


def test_aborted_read_evidence_points_at_writer():
    h = next(f.history for f in ANOMALY_FIXTURES if f.name == "aborted_read")
    [a] = screen(h)
    assert a.txns == (2, 1) and a.ops == (0, 1)
    assert a.to_json() == {"type": "anomaly", "kind": "AbortedRead", "txns": [2, 1], "key": "x", "value": 1, "ops": [0, 1]}


def test_future_read_beats_thin_air():
    # value 1 is also written by T2, but the own later write is the local explanation
    h = History(
        [
            Transaction(1, "s", (r("x", 1), w("x", 1))),
            Transaction(2, "t", (r("y", 0), w("y", 1))),
        ]
    )
    assert [a.kind for a in screen(h)] == [AnomalyKind.FUTURE_READ]


def test_aborted_readers_are_not_screened():
    h = History([Transaction(1, "s", (r("x", 42),), Status.ABORTED)])
    assert screen(h) == []


def test_verify_instance_rejects_wrong_evidence():
    h = next(f.history for f in ANOMALY_FIXTURES if f.name == "thin_air_read")
    [a] = screen(h)
    assert not verify_instance(h, dataclasses.replace(a, value=0))
    bogus = AnomalyInstance(AnomalyKind.THIN_AIR_READ, (1,), "x", 0, (0,))
    assert not verify_instance(h, bogus)
