import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegarm.bands import BANDS, Band
from eegarm.dsp import band_powers, spectrum
from eegarm.errors import ConfigError
from eegarm.labels import ActionLabel, BrainState
from eegarm.synth import BandProfile, NoiseSpec, RawChunk, SignalGenerator, default_profiles, \
    make_generator, write_raw_csv


def _stream(gen, n_chunks=5, n=97):
    return np.concatenate([gen.next_chunk(n).samples for _ in range(n_chunks)])


def test_state_action_mapping_is_bijective():
    assert BrainState.RELAXED_HANDSHAKE.action is ActionLabel.SHAKE_HANDS
    assert BrainState.CONCENTRATED_CUP.action is ActionLabel.PICK_UP_CUP
    assert BrainState.IDLE.action is ActionLabel.STAY_IDLE
    for lab in ActionLabel:
        assert BrainState.from_action(lab).action is lab
    assert [int(a) for a in ActionLabel] == [0, 1, 2]


@pytest.mark.parametrize("text", ["idle", "IDLE", "stayStationary", "stayidle"])
def test_parse_state_aliases(text):
    assert BrainState.parse(text) is BrainState.IDLE


def test_parse_state_rejects_unknown():
    with pytest.raises(ValueError):
        BrainState.parse("sleepy")


def test_same_seed_gives_bitwise_identical_streams():
    a = make_generator(noise=NoiseSpec.quiet(), seed=7)
    b = make_generator(noise=NoiseSpec.quiet(), seed=7)
    assert _stream(a).tobytes() == _stream(b).tobytes()


def test_determinism_with_noise_and_state_script():
    script = [(BrainState.RELAXED_HANDSHAKE, 1.0), (BrainState.IDLE, 0.5), (BrainState.CONCENTRATED_CUP, 1.2)]
    runs = [np.concatenate([c.samples for c in make_generator(seed=7).run_script(script, 33)])
            for _ in range(2)]
    assert runs[0].tobytes() == runs[1].tobytes()


def test_zero_profile_and_zero_noise_give_zero_samples():
    profiles = default_profiles()
    profiles[BrainState.IDLE] = BandProfile.uniform()
    gen = make_generator(profiles, NoiseSpec(mains_amp=0.0, white_sigma=0.0), seed=3)
    assert gen.state is BrainState.IDLE
    assert np.all(gen.next_chunk(400).samples == 0.0)


def test_different_seeds_differ_in_white_noise():
    # identical deterministic part, so any difference comes from the noise draw
    profiles = {s: BandProfile.uniform() for s in BrainState}
    a = make_generator(profiles, NoiseSpec(mains_amp=0.0, white_sigma=2.0), seed=7).next_chunk(200).samples
    b = make_generator(profiles, NoiseSpec(mains_amp=0.0, white_sigma=2.0), seed=8).next_chunk(200).samples
    assert not np.array_equal(a, b)
    assert abs(a.std() - 2.0) < 0.3 and abs(b.std() - 2.0) < 0.3


def test_default_seeds_differ():
    a = make_generator(seed=7).next_chunk(200).samples
    b = make_generator(seed=8).next_chunk(200).samples
    assert not np.array_equal(a, b)


def test_chunk_of_200_spans_one_second():
    gen = make_generator(seed=1)
    c = gen.next_chunk(200)
    assert c.start_index == 0 and c.end_index == 200 and c.duration == pytest.approx(1.0)
    assert gen.next_chunk(10).start_index == 200


def test_pure_alpha_profile_is_a_10hz_sinusoid():
    profiles = {s: BandProfile.uniform() for s in BrainState}
    profiles[BrainState.IDLE] = BandProfile({b: ((10.0, 0, 0, 0) if b is Band.ALPHA else (0, 0, 0, 0))
                                             for b in BANDS})
    gen = SignalGenerator(profiles, NoiseSpec.quiet(), seed=5)
    x = gen.next_chunk(400).samples[:, 0]
    # closed form: 10 sin(2 pi 10 t + phi) for some phi
    t = np.arange(400) / 200.0
    A = np.column_stack([np.sin(2 * np.pi * 10 * t), np.cos(2 * np.pi * 10 * t)])
    coef, *_ = np.linalg.lstsq(A, x, rcond=None)
    assert np.hypot(*coef) == pytest.approx(10.0, rel=1e-12)
    assert np.max(np.abs(A @ coef - x)) < 1e-9
    mags = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(400, 1 / 200)
    assert freqs[np.argmax(mags)] == 10.0


@pytest.mark.parametrize("mains", [50, 60])
def test_mains_peak_before_cleaning(mains):
    profiles = {s: BandProfile.uniform(alpha=1.0) for s in BrainState}
    gen = SignalGenerator(profiles, NoiseSpec(mains_freq=mains, mains_amp=20.0, white_sigma=0.5), seed=2)
    x = gen.next_chunk(400).samples
    mags = np.abs(np.fft.rfft(x, axis=0))
    freqs = np.fft.rfftfreq(400, 1 / 200)
    assert np.all(freqs[np.argmax(mags, axis=0)] == mains)


def test_set_state_changes_truth_and_profile():
    gen = make_generator(seed=1)
    assert gen.next_chunk(10).truth is BrainState.IDLE
    gen.set_state(BrainState.CONCENTRATED_CUP)
    assert gen.next_chunk(10).truth is BrainState.CONCENTRATED_CUP


def test_setting_same_state_twice_is_seamless():
    a = make_generator(noise=NoiseSpec.quiet(), seed=4)
    b = make_generator(noise=NoiseSpec.quiet(), seed=4)
    a.set_state(BrainState.RELAXED_HANDSHAKE)
    b.set_state(BrainState.RELAXED_HANDSHAKE)
    first = a.next_chunk(50).samples
    a.set_state(BrainState.RELAXED_HANDSHAKE)
    joined = np.concatenate([first, a.next_chunk(50).samples])
    assert np.array_equal(joined, b.next_chunk(100).samples)


def test_alternating_states_every_400_samples_in_lockstep():
    gen = make_generator(seed=9)
    script = [(BrainState.RELAXED_HANDSHAKE if k % 2 == 0 else BrainState.CONCENTRATED_CUP, 2.0)
              for k in range(6)]
    chunks = list(gen.run_script(script, chunk_size=100))
    truths = [c.truth for c in chunks]
    assert len(chunks) == 24
    for k, c in enumerate(chunks):
        assert c.start_index == 100 * k
        expected = BrainState.RELAXED_HANDSHAKE if (c.start_index // 400) % 2 == 0 else BrainState.CONCENTRATED_CUP
        assert truths[k] is expected


@pytest.mark.parametrize("band", BANDS)
def test_single_band_profile_spectral_fidelity(band):
    profiles = {s: BandProfile.uniform(**{band.key: 8.0}) for s in BrainState}
    gen = SignalGenerator(profiles, NoiseSpec.quiet(), seed=13)
    p = band_powers(spectrum(gen.next_chunk(256).samples, 200.0))   # (C, B)
    share = p[:, BANDS.index(band)] / p.sum(axis=1)
    assert np.all(share >= 0.95)


@settings(max_examples=30, deadline=None)
@given(sizes=st.lists(st.integers(1, 300), min_size=1, max_size=12), seed=st.integers(0, 2**32 - 1))
def test_indices_are_gap_free(sizes, seed):
    gen = make_generator(seed=seed)
    expected = 0
    for n in sizes:
        c = gen.next_chunk(n)
        assert c.start_index == expected
        assert np.all(np.isfinite(c.samples))
        expected = c.end_index


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), split=st.integers(1, 199))
def test_chunking_does_not_change_samples(seed, split):
    a = make_generator(seed=seed)
    b = make_generator(seed=seed)
    whole = a.next_chunk(200).samples
    parts = np.concatenate([b.next_chunk(split).samples, b.next_chunk(200 - split).samples])
    assert np.array_equal(whole, parts)


def test_missing_state_profile_is_config_error():
    profiles = default_profiles()
    del profiles[BrainState.IDLE]
    with pytest.raises(ConfigError):
        make_generator(profiles)


@pytest.mark.parametrize("kwargs", [{"mains_freq": 55}, {"mains_amp": -1.0}, {"white_sigma": -0.1}])
def test_noise_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        NoiseSpec(**kwargs)


def test_band_profile_validation():
    with pytest.raises(ConfigError):
        BandProfile({b: (1.0, 1.0, 1.0) for b in BANDS})
    with pytest.raises(ConfigError):
        BandProfile({b: (1.0, -1.0, 1.0, 1.0) for b in BANDS})
    with pytest.raises(ConfigError):
        BandProfile({b: (1.0,) * 4 for b in BANDS[:4]})
    with pytest.raises(ConfigError):
        BandProfile.from_dict({"alpha": 3, "kappa": 1})
    p = BandProfile.from_dict({"alpha": [1, 2, 3, 4], "beta": 2})
    assert p.matrix().shape == (5, 4)
    assert BandProfile.from_dict(p.to_dict()) == p


def test_next_chunk_rejects_empty():
    with pytest.raises(ValueError):
        make_generator().next_chunk(0)


def test_raw_chunk_is_read_only():
    c = make_generator().next_chunk(5)
    with pytest.raises(ValueError):
        c.samples[0, 0] = 1.0
    with pytest.raises(ValueError):
        RawChunk(np.zeros((3, 2)), 0)


def test_raw_csv_export(tmp_path):
    gen = make_generator(seed=1)
    rows = write_raw_csv(tmp_path / "raw.csv", [gen.next_chunk(10), gen.next_chunk(5)])
    lines = (tmp_path / "raw.csv").read_text().splitlines()
    assert rows == 15
    assert lines[0] == "index,ch1,ch2,ch3,ch4,truth"
    assert lines[-1].startswith("14,") and lines[-1].endswith(",idle")
