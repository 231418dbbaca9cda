import pytest

from robustsvm import Constant, Diminishing, InputError, TrainConfig, one_pass_iterations, parse_schedule
from robustsvm.config import schedule_text


class TestParseSchedule:
    def test_constant(self):
        assert parse_schedule("constant:0.1") == Constant(0.1)

    def test_diminishing(self):
        assert parse_schedule("diminishing:1.0") == Diminishing(1.0)

    def test_round_trip(self):
        for schedule in (Constant(0.25), Diminishing(0.75)):
            assert parse_schedule(schedule_text(schedule)) == schedule

    def test_malformed(self):
        for text in ("constant", "constant:", "warmup:0.1", "constant:abc"):
            with pytest.raises(InputError):
                parse_schedule(text)


def test_train_config_dict_round_trip():
    cfg = TrainConfig(C=3.0, epsilon=0.4, schedule=Constant(0.05), batch_size=7,
                      block_size=9, iterations=33, master_seed=12, learn_bias=True)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_one_pass_iterations():
    assert one_pass_iterations(2000, 500) == 4
    assert one_pass_iterations(100, 128) == 1
    with pytest.raises(InputError):
        one_pass_iterations(0, 5)
    with pytest.raises(InputError):
        one_pass_iterations(5, 0)
