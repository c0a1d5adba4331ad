import math

import numpy as np
import pytest

import oracles
from conftest import binomial_sigma
from qsac import codec, qcore
from qsac.codec import QsacCodeword, QsacParams, decode, encode, exact_pass_probability, verify
from qsac.keysched import Key
from qsac.qcore import StateVector


def random_case(rng, max_size=10):
    n = int(rng.integers(1, max_size))
    m = int(rng.integers(1, max_size - n + 1))
    key = Key(rng.bytes(int(rng.integers(1, 33))))
    return key, qcore.random_state(m, rng), n


class TestSchedules:
    def test_encode_order_table(self):
        assert codec.encode_schedule([3, 4, 1, 2]) == [(1, 3), (2, 4), (3, 1), (4, 2)]

    def test_decode_order_table(self):
        assert codec.decode_schedule([3, 4, 1, 2]) == [(4, 2), (3, 1), (2, 4), (1, 3)]

    def test_encode_applies_table_order(self, rng):
        message = qcore.random_state(2, rng)
        cw = codec.encode_with(message, [2, 1], [3, 4, 1, 2])
        psi = np.kron(oracles.product_ket([2, 1]), message.amplitudes)
        u = oracles.network_matrix(4, [(1, 3), (2, 4), (3, 1), (4, 2)])
        np.testing.assert_allclose(cw.state.amplitudes, u @ psi, atol=1e-14)

    def test_decode_applies_reverse_order(self, rng):
        cw = QsacCodeword(QsacParams(2, 2), qcore.random_state(4, rng))
        u = oracles.network_matrix(4, [(4, 2), (3, 1), (2, 4), (1, 3)])
        np.testing.assert_allclose(codec.decode_with(cw, [3, 4, 1, 2]).amplitudes, u @ cw.state.amplitudes, atol=1e-14)

    def test_all_self_targets_leave_state(self, rng):
        message = qcore.random_state(3, rng)
        cw = codec.encode_with(message, [0, 3], [1, 2, 3, 4, 5])
        ref = codec.reference_state(message, [0, 3])
        np.testing.assert_array_equal(cw.state.amplitudes, ref.amplitudes)


class TestEncode:
    def test_golden_codeword(self, test_key, golden_dir):
        cw = encode(StateVector.basis("0"), test_key, 3)
        golden = codec.loads_codeword((golden_dir / "codeword_test_key_n3_m1.txt").read_text())
        assert golden.params == cw.params == QsacParams(3, 1)
        np.testing.assert_allclose(cw.state.amplitudes, golden.state.amplitudes, atol=1e-15)

    def test_golden_against_matrix_chain(self, test_key, golden_dir):
        check, targets = codec.key_schedule(test_key, 3, 1)
        expected = oracles.encode_oracle(check, targets, np.array([1, 0], dtype=complex))
        golden = codec.loads_codeword((golden_dir / "codeword_test_key_n3_m1.txt").read_text())
        np.testing.assert_allclose(golden.state.amplitudes, expected, atol=1e-15)

    def test_unitary(self, rng):
        for _ in range(20):
            key, message, n = random_case(rng)
            assert abs(encode(message, key, n).state.norm() - 1) <= 1e-9

    def test_size_cap(self, test_key):
        with pytest.raises(ValueError):
            encode(StateVector.basis("0" * 5), test_key, 16)

    def test_params(self):
        with pytest.raises(ValueError):
            QsacParams(0, 1)
        with pytest.raises(ValueError):
            QsacParams(1, 0)

    def test_codeword_dimension_check(self):
        with pytest.raises(ValueError):
            QsacCodeword(QsacParams(2, 2), StateVector.basis("000"))


class TestDecode:
    def test_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            key, message, n = random_case(rng)
            cw = encode(message, key, n)
            check, _ = codec.key_schedule(key, n, message.num_qubits)
            decoded = decode(cw, key)
            assert qcore.fidelity(decoded, codec.reference_state(message, check)) >= 1 - 1e-10
            assert abs(decoded.norm() - 1) <= 1e-9

    def test_wrong_key_distinguishable(self):
        rng = np.random.default_rng(2)
        message = StateVector.basis("00")
        probs = []
        for _ in range(100):
            k1, k2 = Key(rng.bytes(16)), Key(rng.bytes(16))
            probs.append(exact_pass_probability(encode(message, k1, 6), k2))
        assert np.mean(probs) <= 0.6


class TestVerify:
    def test_honest_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            key, message, n = random_case(rng)
            out = verify(encode(message, key, n), key, rng)
            assert out.authenticated and out.mismatched_check_indices == []
            assert len(out.records) == n
            assert qcore.fidelity(out.message_state, message) >= 1 - 1e-10

    def test_records_follow_check_string(self, test_key, rng):
        out = verify(encode(StateVector.basis("0"), test_key, 3), test_key, rng)
        # S_Q = 3, 0, 1 -> X:1, Z:0, Z:1
        assert [(r.qubit_index, r.basis, r.outcome) for r in out.records] == [(1, "X", 1), (2, "Z", 0), (3, "Z", 1)]

    def test_orthogonal_substitute_always_caught(self, rng):
        # identity network; check qubit 2 expected |0>, delivered |1>
        message = StateVector.basis("1")
        cw = codec.encode_with(message, [2, 0, 3], [1, 2, 3, 4])
        tampered = QsacCodeword(cw.params, qcore.apply_pauli(cw.state, "X", 2))
        for _ in range(50):
            out = codec.verify_with(tampered, [2, 0, 3], [1, 2, 3, 4], rng)
            assert not out.authenticated and out.mismatched_check_indices == [2]

    def test_cross_basis_substitute_passes_half(self):
        # expected |0>, delivered |+>
        rng = np.random.default_rng(4)
        message = StateVector.basis("0")
        check, targets = [0, 1], [1, 2, 3]
        delivered = codec.encode_with(message, [2, 1], targets)
        exact = codec.exact_pass_probability_with(delivered, check, targets)
        assert exact == pytest.approx(0.5)
        trials = 10_000
        passes = sum(codec.verify_with(delivered, check, targets, rng).authenticated for _ in range(trials))
        assert abs(passes / trials - 0.5) <= 0.02

    def test_message_returned_on_failure(self, rng):
        cw = codec.encode_with(StateVector.basis("1"), [0], [1, 2])
        tampered = QsacCodeword(cw.params, qcore.apply_pauli(cw.state, "X", 1))
        out = codec.verify_with(tampered, [0], [1, 2], rng)
        assert not out.authenticated
        assert qcore.classical_bits(out.message_state) == "1"


class TestVerifyMany:
    def test_honest_always_passes(self, test_key, rng):
        cw = encode(qcore.random_state(3, rng), test_key, 4)
        assert codec.verify_many(cw, test_key, rng, 500).all()

    def test_chunking_and_determinism(self, test_key, monkeypatch):
        cw = encode(StateVector.basis("0"), test_key, 3)
        noisy = QsacCodeword(cw.params, qcore.random_state(4, np.random.default_rng(1)))
        whole = codec.verify_many(noisy, test_key, np.random.default_rng(8), 300)
        monkeypatch.setattr(codec, "_BATCH_AMPLITUDES", 16 * 7)
        split = codec.verify_many(noisy, test_key, np.random.default_rng(8), 300)
        np.testing.assert_array_equal(whole, split)

    @pytest.mark.parametrize("case", range(4))
    def test_rate_matches_exact(self, case):
        rng = np.random.default_rng(40 + case)
        key, message, n = random_case(rng, max_size=8)
        cw = encode(message, key, n)
        noisy = QsacCodeword(cw.params, qcore.random_state(cw.params.size, rng))
        p = exact_pass_probability(noisy, key)
        trials = 20_000
        rate = codec.verify_many(noisy, key, rng, trials).mean()
        assert abs(rate - p) <= 3 * binomial_sigma(p, trials) + 1e-12

    def test_rejects_zero_trials(self, test_key, rng):
        with pytest.raises(ValueError):
            codec.verify_many(encode(StateVector.basis("0"), test_key, 2), test_key, rng, 0)


class TestExactPassProbability:
    def test_honest(self, test_key):
        assert exact_pass_probability(encode(StateVector.basis("01"), test_key, 5), test_key) == pytest.approx(1, abs=1e-9)

    def test_flip_through_identity_network(self):
        cw = codec.encode_with(StateVector.basis("0"), [0, 1], [1, 2, 3])
        tampered = QsacCodeword(cw.params, qcore.apply_pauli(cw.state, "X", 1))
        assert codec.exact_pass_probability_with(tampered, [0, 1], [1, 2, 3]) == 0.0

    def test_matches_brute_force(self, rng):
        for _ in range(10):
            key, message, n = random_case(rng, max_size=7)
            cw = encode(message, key, n)
            state = cw.state
            for p in rng.choice(cw.params.size, size=2, replace=False):
                state = qcore.apply_pauli(state, "XYZ"[int(rng.integers(3))], int(p) + 1)
            tampered = QsacCodeword(cw.params, state)
            check, targets = codec.key_schedule(key, n, message.num_qubits)
            expected = oracles.pass_probability_oracle(state.amplitudes, check, targets)
            assert exact_pass_probability(tampered, key) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("seed", [5, 6, 7])
    def test_oracle_equivalence(self, seed):
        rng = np.random.default_rng(seed)
        key, message, n = random_case(rng, max_size=6)
        cw = encode(message, key, n)
        state = qcore.apply_pauli(cw.state, "Y", int(rng.integers(1, cw.params.size + 1)))
        state = qcore.apply_matrix(state, oracles.SINGLE["H"], int(rng.integers(1, cw.params.size + 1)))
        tampered = QsacCodeword(cw.params, state)
        p = exact_pass_probability(tampered, key)
        trials = 10_000
        passes = sum(verify(tampered, key, rng).authenticated for _ in range(trials))
        assert abs(passes / trials - p) <= 3 * binomial_sigma(p, trials) + 1e-12


class TestAvalancheProperty:
    def test_single_x_tamper_spreads(self):
        rng = np.random.default_rng(8)
        checked = 0
        while checked < 30:
            size = int(rng.integers(6, 11))
            n = int(rng.integers(1, size))
            targets = [int(t) for t in rng.integers(1, size + 1, size=size)]
            if all(t == i for i, t in enumerate(targets, 1)):
                continue
            check = [int(b) for b in rng.integers(0, 2, size=n)]
            message = StateVector.basis("".join(str(b) for b in rng.integers(0, 2, size=size - n)))
            cw = codec.encode_with(message, check, targets)
            honest = qcore.classical_bits(codec.decode_with(cw, targets))
            spreads = []
            for p in range(1, size + 1):
                tampered = QsacCodeword(cw.params, qcore.apply_pauli(cw.state, "X", p))
                bits = qcore.classical_bits(codec.decode_with(tampered, targets))
                spreads.append(sum(a != b for a, b in zip(bits, honest)))
            assert min(spreads) >= 1
            assert max(spreads) > 1
            checked += 1


class TestSerialization:
    def test_round_trip(self, rng, test_key):
        cw = encode(qcore.random_state(3, rng), test_key, 4)
        back = codec.loads_codeword(codec.dumps_codeword(cw))
        assert back.params == cw.params
        np.testing.assert_array_equal(back.state.amplitudes, cw.state.amplitudes)

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "garbage\n",
            "qsac-codeword n=1 m=1\n00 1.0 0.0\n",
            "qsac-codeword n=1 m=1 nnz=2\n00 1.0 0.0\n",
            "qsac-codeword n=1 m=x nnz=1\n00 1.0 0.0\n",
            "qsac-codeword n=1 m=1 nnz=1\n000 1.0 0.0\n",
            "qsac-codeword n=1 m=1 nnz=1\n00 0.5 0.0\n",
            "qsac-codeword n=0 m=1 nnz=1\n0 1.0 0.0\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            codec.loads_codeword(text)

    def test_truncated_golden(self, golden_dir):
        text = (golden_dir / "codeword_test_key_n3_m1.txt").read_text()
        with pytest.raises(ValueError):
            codec.loads_codeword(text[: len(text) // 2])
