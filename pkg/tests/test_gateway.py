import json
import threading

import pytest

from chromalab.errors import BackendUnavailable, ExhaustedRetries
from chromalab.gateway import (
    BackendRequest,
    Gateway,
    GatewayConfig,
    MockBackend,
    OutputSchema,
    PromptTemplate,
    parse_structured,
)

NUMBER_0_100 = OutputSchema(kind="number", minimum=0, maximum=100)


def make_gateway(script, max_retries=3, schema=NUMBER_0_100):
    gateway = Gateway(MockBackend(script), GatewayConfig(max_retries=max_retries))
    gateway.register_schema("s", schema)
    gateway.register_template(PromptTemplate("t", "value for {slot}?", "s"))
    return gateway


class TestSchemas:
    def test_number_range(self):
        assert NUMBER_0_100.validate(95) == []
        assert NUMBER_0_100.validate(110) != []
        assert NUMBER_0_100.validate("95") != []

    def test_array_distinct_case_insensitive(self):
        schema = OutputSchema(kind="array", items=OutputSchema(kind="string", non_empty=True),
                              min_items=2, max_items=2, distinct_ci=True)
        assert schema.validate(["a", "b"]) == []
        assert schema.validate(["a", "A"]) != []
        assert schema.validate(["a"]) != []
        assert schema.validate(["a", " "]) != []

    def test_object_required_and_enum(self):
        schema = OutputSchema(kind="object", required=("role",),
                              properties={"role": OutputSchema(kind="string",
                                                               choices=("colorant", "solvent"))})
        assert schema.validate({"role": "colorant"}) == []
        assert schema.validate({}) != []
        assert schema.validate({"role": "glue"}) != []

    def test_parse_tolerates_code_fence(self):
        value, err = parse_structured("```json\n[1, 2]\n```")
        assert err is None and value == [1, 2]
        value, err = parse_structured("not json")
        assert value is None and "not valid JSON" in err


class TestComplete:
    def test_passthrough_no_retries(self):
        gateway = make_gateway({"t": ["42"]})
        result = gateway.complete("t", {"slot": "x"})
        assert result.value == 42
        assert result.retries_used == 0

    def test_invalid_then_valid_uses_one_retry(self):
        gateway = make_gateway({"t": ["110", "42"]})
        result = gateway.complete("t", {"slot": "x"})
        assert result.value == 42
        assert result.retries_used == 1

    def test_exhaustion_after_max_retries(self):
        gateway = make_gateway({"t": ["110", "111", "112", "113"]}, max_retries=3)
        with pytest.raises(ExhaustedRetries):
            gateway.complete("t", {"slot": "x"})

    def test_backend_called_exactly_retries_plus_one(self):
        calls = []

        class Counting:
            def generate(self, request: BackendRequest) -> str:
                calls.append(request.prompt)
                return "110" if len(calls) < 3 else "7"

        gateway = Gateway(Counting(), GatewayConfig(max_retries=5))
        gateway.register_schema("s", NUMBER_0_100)
        gateway.register_template(PromptTemplate("t", "value for {slot}?", "s"))
        result = gateway.complete("t", {"slot": "x"})
        assert result.retries_used == 2
        assert len(calls) == result.retries_used + 1
        assert "failed validation" in calls[1]  # error appended to the retry prompt

    def test_referentially_transparent_with_fixed_script(self):
        gateway = make_gateway({"t": ["42"]})
        first = gateway.complete("t", {"slot": "x"})
        second = gateway.complete("t", {"slot": "x"})
        assert first == second

    def test_unbound_slot_rejected(self):
        gateway = make_gateway({"t": ["42"]})
        with pytest.raises(KeyError):
            gateway.complete("t", {})

    def test_unknown_template_is_transport_error(self):
        gateway = make_gateway({"t": ["42"]})
        backend = gateway.backend
        with pytest.raises(BackendUnavailable):
            backend.generate(BackendRequest("nope", "p", {}))


class TestMockBackend:
    def test_script_repeats_last_entry(self):
        backend = MockBackend({"t": ["1", "2"]})
        req = BackendRequest("t", "p", {})
        assert [backend.generate(req) for _ in range(4)] == ["1", "2", "2", "2"]

    def test_keyed_script_is_scheduling_independent(self):
        script = {"t": {"key_slot": "aid", "responses": {f"a{i}": str(i) for i in range(32)}}}
        backend = MockBackend(script)
        results = {}

        def work(i):
            results[i] = backend.generate(BackendRequest("t", "p", {"aid": f"a{i}"}))

        threads = [threading.Thread(target=work, args=(i,)) for i in range(32)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == {i: str(i) for i in range(32)}

    def test_keyed_script_sequences_per_key(self):
        script = {"t": {"key_slot": "aid", "responses": {"a": ["1", "2"]}}}
        backend = MockBackend(script)
        req = BackendRequest("t", "p", {"aid": "a"})
        assert [backend.generate(req) for _ in range(3)] == ["1", "2", "2"]

    def test_missing_key_is_transport_error(self):
        backend = MockBackend({"t": {"key_slot": "aid", "responses": {}}})
        with pytest.raises(BackendUnavailable):
            backend.generate(BackendRequest("t", "p", {"aid": "zzz"}))


class TestTemplates:
    def test_positional_slots_rejected(self):
        with pytest.raises(ValueError):
            PromptTemplate("t", "value {}", "s")

    def test_template_requires_registered_schema(self):
        gateway = Gateway(MockBackend({}), GatewayConfig())
        with pytest.raises(KeyError):
            gateway.register_template(PromptTemplate("t", "x {a}", "missing"))

    def test_config_bounds(self):
        with pytest.raises(ValueError):
            GatewayConfig(max_retries=11)

    def test_fixture_file_format(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps({"t": ["5"]}), encoding="utf-8")
        backend = MockBackend.from_file(path)
        assert backend.generate(BackendRequest("t", "p", {})) == "5"
