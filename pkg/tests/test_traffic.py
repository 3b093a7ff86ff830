import itertools
import math

import pytest

from stepnet.kernel import RandomStream, seconds
from stepnet.traffic import (FtpSource, FtpSourceSpec, MisroutedPacket, Packet, Sink,
                             VoipSource, VoipSourceSpec, segment_sizes)


def drain(source, until):
    out = []
    t = source.first_emit()
    while t is not None and t < until:
        pkts, t = source.emit(t)
        out.extend(pkts if isinstance(pkts, list) else [pkts])
    return out


def test_voip_defaults_are_pcm_rate():
    spec = VoipSourceSpec("h0_0", "h1_0")
    # 64 kbit/s for 20 ms is 160 bytes of payload
    assert 64_000 * 0.020 / 8 == spec.payload_bytes
    pkts = drain(VoipSource(spec, itertools.count()), seconds(1.0))
    assert len(pkts) == 50
    assert sum(p.size_bytes - spec.header_bytes for p in pkts) * 8 == 64_000
    assert all(p.tos == 6 for p in pkts)
    assert all(p.size_bytes == 200 for p in pkts)


def test_voip_start_stop_window():
    spec = VoipSourceSpec("a", "b", start=1.0, stop=1.05)
    pkts = drain(VoipSource(spec, itertools.count()), seconds(10))
    assert [p.created_at for p in pkts] == [seconds(1.0), seconds(1.02), seconds(1.04)]


@pytest.mark.parametrize("start,interval,T", [(0.0, 0.02, 10.0), (0.013, 0.02, 7.5),
                                              (0.5, 0.03, 3.0), (0.0, 0.015, 1.0)])
def test_voip_offered_load_identity(start, interval, T):
    spec = VoipSourceSpec("a", "b", frame_interval=interval, start=start)
    pkts = drain(VoipSource(spec, itertools.count()), seconds(T))
    # frames are emitted at start + k*interval for every such instant before T
    expected = math.ceil(round((T - start) / interval, 9))
    assert len(pkts) == expected
    assert sum(p.size_bytes for p in pkts) == expected * spec.packet_bytes


def test_segmentation():
    # division oracle: 1,000,000 = 684 * 1460 + 1360
    assert divmod(1_000_000, 1460) == (684, 1360)
    sizes = segment_sizes(1_000_000, 1460)
    assert len(sizes) == 685
    assert sizes[-1] == 1360 and set(sizes[:-1]) == {1460}
    assert sum(sizes) == 1_000_000
    assert segment_sizes(2920, 1460) == [1460, 1460]


def test_ftp_request_emits_whole_file():
    spec = FtpSourceSpec("a", "b", mean_interrequest=1.0, file_size_bytes=1_000_000)
    src = FtpSource(spec, itertools.count(), RandomStream(1, "ftp"))
    pkts, nxt = src.emit(seconds(2))
    assert len(pkts) == 685
    assert pkts[-1].size_bytes == 1360 + 40 and pkts[0].size_bytes == 1500
    assert all(p.tos == 0 and p.created_at == seconds(2) for p in pkts)
    assert nxt > seconds(2)


def test_ftp_interrequest_mean():
    spec = FtpSourceSpec("a", "b", mean_interrequest=2.5, file_size_bytes=10)
    src = FtpSource(spec, itertools.count(), RandomStream(11, "ftp-arrivals"))
    t = 0
    gaps = []
    for _ in range(10_000):
        _, nxt = src.emit(t)
        gaps.append(nxt - t)
        t = nxt
    mean = sum(gaps) / len(gaps) / 1e9
    assert abs(mean - 2.5) / 2.5 < 0.02


def test_source_determinism():
    def trace(seed):
        spec = FtpSourceSpec("a", "b", mean_interrequest=0.5, file_size_bytes=3000)
        return [(p.id, p.created_at, p.size_bytes)
                for p in drain(FtpSource(spec, itertools.count(), RandomStream(seed, "f")),
                               seconds(30))]
    assert trace(1) == trace(1)
    assert trace(1) != trace(2)
    voip = VoipSourceSpec("a", "b")
    one = [p.created_at for p in drain(VoipSource(voip, itertools.count()), seconds(3))]
    two = [p.created_at for p in drain(VoipSource(voip, itertools.count(100)), seconds(3))]
    assert one == two


def test_sink():
    sink = Sink("h1_0")
    p = Packet(1, "h0_0", "h1_0", 6, 200, seconds(1.000))
    rec = sink.receive(p, seconds(1.004))
    assert rec.delivered_at - rec.created_at == seconds(0.004)
    sink.receive(Packet(2, "h0_0", "h1_0", 6, 200, 0), 5)
    assert sink.received[6] == 2
    with pytest.raises(MisroutedPacket):
        Sink("h0_1").receive(p, 10)


def test_packet_validation():
    with pytest.raises(ValueError):
        Packet(1, "a", "b", 0, 0, 0)
    with pytest.raises(ValueError):
        Packet(1, "a", "b", 8, 10, 0)
    with pytest.raises(ValueError):
        VoipSourceSpec("a", "b", frame_interval=0).validate()
    with pytest.raises(ValueError):
        FtpSourceSpec("a", "b", file_size_bytes=0).validate()
