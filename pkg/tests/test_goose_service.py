"""
Tests for the GOOSE frame codec, publisher counters and the simulated bus
"""
import numpy as np
import pytest

from dcprotect.exceptions import (
    BadMagicError,
    FrameDecodeError,
    FrameEncodeError,
    InvalidFieldError,
    LengthMismatchError,
    TruncatedFrameError,
)
from dcprotect.schemas.goose import UINT32_MAX, BusConfig, DatasetEntry, EntryKind, GooseFrame, RetransmitSchedule
from dcprotect.services.goose_service import HEADER, MAGIC, GooseBus, GooseCodec, Publisher


def entries(n: int):
    return tuple(DatasetEntry(kind=EntryKind.PICKED_UP, entry_id=i, value=i % 2 == 0) for i in range(n))


def random_frame(rng: np.random.Generator) -> GooseFrame:
    count = int(rng.integers(0, 65))
    return GooseFrame(
        app_id=int(rng.integers(0, 2**16)),
        publisher_id=int(rng.integers(0, 2**32)),
        st_num=int(rng.integers(0, 2**32)),
        sq_num=int(rng.integers(0, 2**32)),
        timestamp=int(rng.integers(0, 2**64, dtype=np.uint64)),
        dataset=tuple(
            DatasetEntry(kind=int(rng.integers(0, 256)), entry_id=int(rng.integers(0, 2**32)),
                         value=bool(rng.integers(0, 2)))
            for _ in range(count)
        ),
    )


def bus(subscribers=("R21", "R23", "R24"), **config) -> GooseBus:
    goose_bus = GooseBus(BusConfig(**config), RetransmitSchedule())
    goose_bus.register(1, "R12")
    goose_bus.subscribe(1, subscribers)
    return goose_bus


# ---------------------------------------------------------------------------
# Codec
# ---------------------------------------------------------------------------


class TestEncode:
    def test_empty_frame_layout(self):
        data = GooseCodec.encode_frame(GooseFrame(app_id=1, publisher_id=12, st_num=1, sq_num=0, timestamp=0))
        assert len(data) == 25
        assert data[:4] == bytes([0x47, 0x4F, 0x00, 0x01])
        assert data[4:8] == (12).to_bytes(4, "big")
        assert data[-1] == 0

    def test_entry_layout(self):
        frame = GooseFrame(publisher_id=1, dataset=(DatasetEntry(kind=6, entry_id=258, value=True),))
        data = GooseCodec.encode_frame(frame)
        assert len(data) == GooseCodec.frame_length(1) == 31
        assert data[-6:] == bytes([6, 0, 0, 1, 2, 1])

    def test_sixty_four_entries_fit(self):
        frame = GooseFrame(publisher_id=1, dataset=entries(64))
        assert len(GooseCodec.encode_frame(frame)) == 25 + 6 * 64

    def test_sixty_five_entries_rejected(self):
        with pytest.raises(FrameEncodeError):
            GooseCodec.encode_frame(GooseFrame(publisher_id=1, dataset=entries(65)))

    def test_field_ranges(self):
        with pytest.raises(ValueError):
            GooseFrame(publisher_id=UINT32_MAX + 1)
        with pytest.raises(ValueError):
            GooseFrame(publisher_id=1, app_id=2**16)


class TestDecode:
    def test_inverse_of_encode(self):
        frame = GooseFrame(app_id=7, publisher_id=3, st_num=5, sq_num=2, timestamp=123456789, dataset=entries(3))
        assert GooseCodec.decode_frame(GooseCodec.encode_frame(frame)) == frame

    def test_random_valid_frames(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            frame = random_frame(rng)
            data = GooseCodec.encode_frame(frame)
            assert GooseCodec.decode_frame(data) == frame
            assert GooseCodec.encode_frame(GooseCodec.decode_frame(data)) == data

    def test_truncated_ten_bytes(self):
        with pytest.raises(TruncatedFrameError):
            GooseCodec.decode_frame(MAGIC + bytes(8))

    def test_shorter_than_magic(self):
        with pytest.raises(TruncatedFrameError):
            GooseCodec.decode_frame(b"G")

    def test_bad_magic(self):
        with pytest.raises(BadMagicError):
            GooseCodec.decode_frame(b"XX" + bytes(23))

    def test_missing_entries(self):
        data = GooseCodec.encode_frame(GooseFrame(publisher_id=1, dataset=entries(2)))
        with pytest.raises(TruncatedFrameError):
            GooseCodec.decode_frame(data[:-6])

    def test_trailing_bytes(self):
        data = GooseCodec.encode_frame(GooseFrame(publisher_id=1))
        with pytest.raises(LengthMismatchError):
            GooseCodec.decode_frame(data + b"\x00")

    def test_count_over_limit(self):
        header = HEADER.pack(MAGIC, 1, 1, 1, 0, 0, 65)
        with pytest.raises(InvalidFieldError):
            GooseCodec.decode_frame(header + bytes(6 * 65))

    def test_non_boolean_value(self):
        data = bytearray(GooseCodec.encode_frame(GooseFrame(publisher_id=1, dataset=entries(1))))
        data[-1] = 2
        with pytest.raises(InvalidFieldError):
            GooseCodec.decode_frame(bytes(data))

    def test_errors_share_a_base(self):
        assert issubclass(BadMagicError, FrameDecodeError)
        assert issubclass(FrameDecodeError, ValueError)


@pytest.mark.slow
class TestDecodeFuzz:
    def test_random_bytes_never_crash(self):
        rng = np.random.default_rng(20240101)
        outcomes = {"frame": 0, "error": 0}
        for i in range(1_000_000):
            data = rng.bytes(int(rng.integers(0, 1025)))
            if i % 2:
                data = MAGIC + data
            try:
                GooseCodec.decode_frame(data)
                outcomes["frame"] += 1
            except FrameDecodeError:
                outcomes["error"] += 1
        assert sum(outcomes.values()) == 1_000_000

    def test_mutated_frames_never_crash(self):
        rng = np.random.default_rng(7)
        for _ in range(100_000):
            data = bytearray(GooseCodec.encode_frame(random_frame(rng)))
            for _ in range(int(rng.integers(1, 4))):
                data[int(rng.integers(0, len(data)))] = int(rng.integers(0, 256))
            if rng.random() < 0.3:
                data = data[:int(rng.integers(0, len(data) + 1))]
            try:
                frame = GooseCodec.decode_frame(bytes(data))
            except FrameDecodeError:
                continue
            assert GooseCodec.encode_frame(frame) == bytes(data)


# ---------------------------------------------------------------------------
# Publisher counters
# ---------------------------------------------------------------------------


class TestPublisher:
    def test_state_change_resets_sequence(self):
        publisher = Publisher(12)
        first = publisher.next_frame(entries(1), 0)
        assert (first.st_num, first.sq_num) == (1, 0)
        repeat = publisher.next_frame(entries(1), 10, state_change=False)
        assert (repeat.st_num, repeat.sq_num) == (1, 1)
        change = publisher.next_frame(entries(2), 20)
        assert (change.st_num, change.sq_num) == (2, 0)

    def test_state_number_wraps_to_one(self):
        publisher = Publisher(12)
        publisher.st_num = UINT32_MAX
        assert publisher.next_frame((), 0).st_num == 1

    def test_dataset_retained_for_heartbeats(self):
        publisher = Publisher(12)
        publisher.next_frame(entries(2), 0)
        assert publisher.dataset == entries(2)


# ---------------------------------------------------------------------------
# Bus
# ---------------------------------------------------------------------------


class TestBus:
    def test_default_latency(self):
        goose_bus = bus()
        frame = Publisher(1).next_frame(entries(1), 0)
        deliveries = goose_bus.publish(frame, 1_000, state_change=False)
        assert [d.subscriber for d in deliveries] == ["R21", "R23", "R24"]
        assert {d.time_ns for d in deliveries} == {1_000 + 66_000}

    def test_security_overhead(self):
        goose_bus = bus(security_overhead=1.8e-3)
        deliveries = goose_bus.publish(Publisher(1).next_frame((), 0), 0, state_change=False)
        assert {d.time_ns for d in deliveries} == {1_866_000}

    def test_publisher_does_not_hear_itself(self):
        goose_bus = bus(subscribers=("R12", "R21"))
        deliveries = goose_bus.publish(Publisher(1).next_frame((), 0), 0, state_change=False)
        assert [d.subscriber for d in deliveries] == ["R21"]

    def test_burst_retransmissions(self):
        goose_bus = bus(subscribers=("R21",))
        deliveries = goose_bus.publish(Publisher(1).next_frame((), 0), 0)
        assert [d.frame.sq_num for d in deliveries] == [0, 1, 2, 3, 4]
        assert [d.time_ns for d in deliveries] == [66_000, 1_066_000, 3_066_000, 7_066_000, 15_066_000]
        assert all(d.frame.st_num == 1 for d in deliveries)
        assert goose_bus.published == 5

    def test_unregistered_publisher(self):
        goose_bus = bus()
        with pytest.raises(ValueError, match="not registered"):
            goose_bus.publish(Publisher(9).next_frame((), 0), 0)

    def test_jitter_bounds(self):
        goose_bus = bus(jitter=20e-6, rng_seed=3)
        for k in range(200):
            for d in goose_bus.publish(Publisher(1).next_frame((), 0), k * 1_000, state_change=False):
                assert k * 1_000 + 46_000 <= d.time_ns <= k * 1_000 + 86_000

    def test_order_preserved_without_jitter(self):
        goose_bus = bus(subscribers=("R21",))
        publisher = Publisher(1)
        times = []
        for k in range(10):
            times.extend(d.time_ns for d in goose_bus.publish(publisher.next_frame((), k * 10), k * 10,
                                                               state_change=False))
        assert times == sorted(times)

    def test_seeded_schedule_is_reproducible(self):
        def schedule():
            goose_bus = bus(jitter=30e-6, loss_probability=0.2, rng_seed=42)
            publisher = Publisher(1)
            out = []
            for k in range(50):
                out.extend((d.subscriber, d.time_ns, d.frame.sq_num)
                           for d in goose_bus.publish(publisher.next_frame((), k * 100_000), k * 100_000))
            return out
        assert schedule() == schedule()

    def test_eventual_delivery_with_loss(self):
        loss = 0.5
        goose_bus = bus(subscribers=("R21",), loss_probability=loss, rng_seed=11)
        publisher = Publisher(1)
        trials = 20_000
        reached = sum(
            1 for k in range(trials)
            if goose_bus.publish(publisher.next_frame((), k), k)
        )
        expected = 1 - loss ** 5
        assert reached / trials == pytest.approx(expected, abs=0.01)

    def test_capture_dump(self):
        goose_bus = bus(subscribers=("R21", "R23"))
        frame = Publisher(1).next_frame(entries(1), 0)
        goose_bus.publish(frame, 0, state_change=False)
        lines = goose_bus.dump_capture().splitlines()
        assert len(lines) == 2
        time_ns, subscriber, payload = lines[0].split()
        assert (int(time_ns), subscriber) == (66_000, "R21")
        assert GooseCodec.decode_frame(bytes.fromhex(payload)) == frame

    def test_empty_capture(self):
        assert bus().dump_capture() == ""
