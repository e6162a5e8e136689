import pytest

from mtc.fixtures import FIXTURES_BY_NAME, FORK_HISTORY, LWT_LINEARIZABLE, LWT_NOT_LINEARIZABLE
from mtc.history import History, Transaction, r, w
from mtc.lwt import LwtHistory, insert, rw
from mtc.oracle import OracleBudget, OracleRefused, oracle_lin, oracle_ser, oracle_si, oracle_sser


def chain(n=3):
    return History(
        [Transaction(i, f"s{i}", (r("x", i - 1), w("x", i)), start=10 * i, commit=10 * i + 5) for i in range(1, n + 1)]
    )


def test_fork_shape_fails_everywhere():
    assert not oracle_ser(FORK_HISTORY)
    assert not oracle_si(FORK_HISTORY)
    assert not oracle_sser(FORK_HISTORY)


def test_serial_chain():
    h = chain(5)
    assert oracle_ser(h) and oracle_sser(h) and oracle_si(h)


def test_write_skew_is_si_only():
    h = FIXTURES_BY_NAME["write_skew"].history
    assert oracle_si(h)
    assert not oracle_ser(h)


def test_lost_update():
    assert not oracle_si(FIXTURES_BY_NAME["lost_update"].history)


def test_blind_writers_need_a_ww_choice():
    # T1 and T2 both overwrite x after reading y; either WW order is fine
    h = History(
        [
            Transaction(1, "a", (r("y", 0), r("x", 0), w("x", 1))),
            Transaction(2, "b", (r("x", 1), w("x", 2))),
        ]
    )
    assert oracle_ser(h)


def test_lin_fixtures():
    assert oracle_lin(LwtHistory("x", tuple(LWT_LINEARIZABLE)))
    assert not oracle_lin(LwtHistory("x", tuple(LWT_NOT_LINEARIZABLE)))


def test_lin_empty():
    assert oracle_lin(LwtHistory("x", ()))


def test_lin_needs_insert_first():
    assert not oracle_lin(LwtHistory("x", (rw("x", 0, 1, 0, 1),)))
    assert not oracle_lin(LwtHistory("x", (insert("x", 0, 0, 1), insert("x", 1, 2, 3))))


def test_refusal_is_not_a_verdict():
    with pytest.raises(OracleRefused):
        oracle_ser(chain(9))
    with pytest.raises(OracleRefused):
        oracle_ser(chain(3), budget=OracleBudget(max_txns=2))
    ops = tuple([insert("x", 0, 0, 1)] + [rw("x", i, i + 1, 2 * i + 2, 2 * i + 3) for i in range(8)])
    with pytest.raises(OracleRefused):
        oracle_lin(LwtHistory("x", ops))


def test_permutation_budget():
    # four writers that all read the initial x: no order works, so all 4! are tried
    txns = [Transaction(i, f"s{i}", (r("x", 0), w("x", i))) for i in range(1, 5)]
    h = History(txns)
    assert not oracle_ser(h)
    with pytest.raises(OracleRefused):
        oracle_ser(h, budget=OracleBudget(max_permutations=5))
