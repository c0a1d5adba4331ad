import numpy as np
import pytest

import oracles
from conftest import binomial_sigma
from qsac import adversary, codec, qcore
from qsac.adversary import AttackSpec
from qsac.codec import QsacCodeword, exact_pass_probability
from qsac.keysched import Key
from qsac.qcore import StateVector


def identity_codeword(check, message_bits):
    message = StateVector.basis(message_bits)
    targets = list(range(1, len(check) + len(message_bits) + 1))
    return codec.encode_with(message, check, targets), targets


class TestAttackSpec:
    def test_json_round_trip(self):
        for spec in [
            AttackSpec("PauliTamper", positions=(1, 3), pauli="Y"),
            AttackSpec("CheckSubstitution", j=2),
            AttackSpec("InterceptResend", j=0),
            AttackSpec("Impersonation", guessed_key=Key(b"\x01\x02")),
            AttackSpec("Impersonation"),
        ]:
            assert AttackSpec.from_json(spec.to_json()) == spec

    def test_json_shape(self):
        obj = {"kind": "PauliTamper", "positions": {"random": 2}, "pauli": "Z"}
        spec = AttackSpec.from_json(obj)
        assert spec.j == 2 and spec.positions is None and spec.pauli == "Z"
        assert spec.to_json() == obj

    @pytest.mark.parametrize(
        "obj",
        [
            {"positions": [1]},
            {"kind": "Bogus", "positions": [1]},
            {"kind": "PauliTamper"},
            {"kind": "PauliTamper", "positions": [1, 1]},
            {"kind": "PauliTamper", "positions": [1], "pauli": "H"},
            {"kind": "PauliTamper", "positions": {"rand": 1}},
            {"kind": "PauliTamper", "positions": "1"},
            {"kind": "PauliTamper", "positions": [1], "extra": 1},
            {"kind": "Impersonation", "guessed_key": "xyz"},
        ],
    )
    def test_invalid(self, obj):
        with pytest.raises(ValueError):
            AttackSpec.from_json(obj)


class TestPauliTamper:
    def test_identity_network_isolates(self, rng):
        cw, targets = identity_codeword([0, 1, 0], "01")
        for pos in range(1, 6):
            t = adversary.pauli_tamper(cw, AttackSpec("PauliTamper", positions=(pos,)), rng)
            p = codec.exact_pass_probability_with(t.codeword, [0, 1, 0], targets)
            assert p == (0.0 if pos <= 3 else 1.0)

    def test_z_on_plus_check(self, rng):
        cw, targets = identity_codeword([2, 0], "1")
        t = adversary.pauli_tamper(cw, AttackSpec("PauliTamper", positions=(1,), pauli="Z"), rng)
        assert codec.exact_pass_probability_with(t.codeword, [2, 0], targets) == pytest.approx(0.0, abs=1e-15)

    def test_golden_codeword_x_scan(self, test_key, rng):
        cw = codec.encode(StateVector.basis("0"), test_key, 3)
        check, targets = codec.key_schedule(test_key, 3, 1)
        got = []
        for pos in range(1, 5):
            t = adversary.pauli_tamper(cw, AttackSpec("PauliTamper", positions=(pos,)), rng)
            got.append(exact_pass_probability(t.codeword, test_key))
            brute = oracles.single_matrix(4, pos, "X") @ cw.state.amplitudes
            assert got[-1] == pytest.approx(oracles.pass_probability_oracle(brute, check, targets), abs=1e-12)
        # frozen after the 16x16 brute-force recomputation above
        assert got == pytest.approx([0.0, 0.0, 0.0, 1.0], abs=1e-12)

    def test_norm_and_resolution(self, test_key):
        cw = codec.encode(qcore.random_state(3, np.random.default_rng(0)), test_key, 5)
        spec = AttackSpec("PauliTamper", j=3, pauli="Y")
        a = adversary.pauli_tamper(cw, spec, np.random.default_rng(42))
        b = adversary.pauli_tamper(cw, spec, np.random.default_rng(42))
        assert abs(a.codeword.state.norm() - 1) <= 1e-9
        assert a.applied.positions == b.applied.positions and len(a.applied.positions) == 3
        np.testing.assert_array_equal(a.codeword.state.amplitudes, b.codeword.state.amplitudes)

    def test_out_of_range(self, rng, test_key):
        cw = codec.encode(StateVector.basis("0"), test_key, 2)
        with pytest.raises(IndexError):
            adversary.pauli_tamper(cw, AttackSpec("PauliTamper", positions=(4,)), rng)


class TestSubstitution:
    def test_exactly_j_changed(self):
        rng = np.random.default_rng(1)
        check = [0, 1, 2, 3, 0, 1, 2, 3]
        for j in range(1, 9):
            out = adversary.substitute_check_states(check, j, rng)
            assert sum(a != b for a, b in zip(check, out)) == j
            assert all(s in (0, 1, 2, 3) for s in out)

    def test_j_out_of_range(self, rng):
        with pytest.raises(ValueError):
            adversary.substitute_check_states([0, 1], 0, rng)
        with pytest.raises(ValueError):
            adversary.substitute_check_states([0, 1], 3, rng)

    def test_single_substitute_mean_is_one_third(self):
        # |0> replaced uniformly by |1>, |+>, |->: (0 + 1/2 + 1/2) / 3
        rng = np.random.default_rng(2)
        seen = {1: 0, 2: 0, 3: 0}
        total = 0.0
        trials = 30_000
        for _ in range(trials):
            (s,) = adversary.substitute_check_states([0], 1, rng)
            seen[s] += 1
            total += qcore.fidelity(qcore.prepare_product([0]), qcore.prepare_product([s]))
        assert all(abs(c / trials - 1 / 3) < 0.015 for c in seen.values())
        assert abs(total / trials - 1 / 3) <= 3 * binomial_sigma(1 / 3, trials)

    def test_two_substitutions(self):
        rng = np.random.default_rng(3)
        check = [0, 2, 1, 3, 2, 0]
        ref = codec.check_targets(check)
        trials = 100_000
        total = 0.0
        for _ in range(trials):
            sub = qcore.prepare_product(adversary.substitute_check_states(check, 2, rng))
            total += qcore.projection_probability(sub, ref)
        # per-trial value is in {0, 1/4, 1/2, 1}; bound by the Bernoulli variance at 1/9
        assert abs(total / trials - 1 / 9) <= 3 * binomial_sigma(1 / 9, trials)

    def test_channel_builds_substituted_register(self, test_key):
        message = qcore.random_state(2, np.random.default_rng(5))
        cw = codec.encode(message, test_key, 6)
        check, targets = codec.key_schedule(test_key, 6, 2)
        rng = np.random.default_rng(6)
        t = adversary.check_substitution(cw, AttackSpec("CheckSubstitution", positions=(2, 5)), test_key, rng)
        rng = np.random.default_rng(6)
        expected_check = adversary.substitute_check_states(check, 2, rng, positions=[2, 5])
        decoded = codec.decode_with(t.codeword, targets)
        assert qcore.fidelity(decoded, codec.reference_state(message, expected_check)) == pytest.approx(1, abs=1e-10)

    @pytest.mark.parametrize("j", [1, 2, 3])
    def test_mc_rate_matches_formula(self, test_key, j):
        n, m, trials = 6, 2, 30_000
        message = StateVector.basis("10")
        cw = codec.encode(message, test_key, n)
        spec = AttackSpec("CheckSubstitution", j=j)
        rng = np.random.default_rng(1000 + j)
        passes = 0
        for _ in range(trials):
            t = adversary.apply_attack(cw, spec, test_key, rng)
            passes += codec.verify(t.codeword, test_key, rng).authenticated
        eps = (1 / 3) ** j
        assert abs(passes / trials - eps) <= 3 * binomial_sigma(eps, trials)


class TestInterceptResend:
    def test_single_check_qubit_quarter(self):
        cw, targets = identity_codeword([0, 1], "0")
        rng = np.random.default_rng(10)
        trials = 20_000
        detected = 0
        for _ in range(trials):
            t = adversary.intercept_resend(cw, [1], rng)
            detected += not codec.verify_with(t.codeword, [0, 1], targets, rng).authenticated
        assert abs(detected / trials - 0.25) <= 3 * binomial_sigma(0.25, trials)

    def test_no_positions(self, rng, test_key):
        cw = codec.encode(StateVector.basis("01"), test_key, 3)
        t = adversary.intercept_resend(cw, [], rng)
        np.testing.assert_array_equal(t.codeword.state.amplitudes, cw.state.amplitudes)

    def test_dimensions_and_norm(self, rng, test_key):
        cw = codec.encode(qcore.random_state(2, rng), test_key, 4)
        t = adversary.intercept_resend(cw, [1, 3, 6], rng)
        assert t.codeword.params == cw.params
        assert abs(t.codeword.state.norm() - 1) <= 1e-9

    def test_out_of_range(self, rng, test_key):
        cw = codec.encode(StateVector.basis("0"), test_key, 2)
        with pytest.raises(IndexError):
            adversary.intercept_resend(cw, [0], rng)

    def test_all_positions_at_least_single(self):
        key = Key(b"intercept-instance")
        message = StateVector.basis("01")
        cw = codec.encode(message, key, 4)
        trials = 4000

        def rate(positions, seed):
            rng = np.random.default_rng(seed)
            return sum(
                not codec.verify(adversary.intercept_resend(cw, positions, rng).codeword, key, rng).authenticated
                for _ in range(trials)
            ) / trials

        assert rate(list(range(1, 7)), 1) >= rate([3], 2)


class TestImpersonation:
    def test_right_key_always_passes(self, rng, test_key):
        message = qcore.random_state(2, rng)
        for _ in range(20):
            assert adversary.impersonate(message, test_key, test_key, 5, rng).authenticated

    def test_wrong_key_far_below_honest(self, test_key):
        rng = np.random.default_rng(11)
        message = StateVector.basis("00")
        trials = 10_000
        passes = sum(
            adversary.impersonate(message, adversary.random_key(rng), test_key, 8, rng).authenticated for _ in range(trials)
        )
        assert passes / trials < 0.05

    def test_single_bit_wrong_key(self, test_key):
        rng = np.random.default_rng(12)
        near = Key(bytes([test_key.bits[0] ^ 1]) + test_key.bits[1:])
        message = StateVector.basis("00")
        rate = sum(adversary.impersonate(message, near, test_key, 8, rng).authenticated for _ in range(2000)) / 2000
        assert rate < 0.5

    def test_dispatch_draws_key_when_unset(self, test_key):
        cw = codec.encode(StateVector.basis("0"), test_key, 3)
        t = adversary.apply_attack(cw, AttackSpec("Impersonation"), test_key, np.random.default_rng(1), message=StateVector.basis("0"))
        assert t.applied.guessed_key is not None and t.applied.guessed_key != test_key

    def test_dispatch_needs_message(self, test_key, rng):
        cw = codec.encode(StateVector.basis("0"), test_key, 3)
        with pytest.raises(ValueError):
            adversary.apply_attack(cw, AttackSpec("Impersonation"), test_key, rng)
