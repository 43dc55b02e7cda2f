import json
import math

import numpy as np
import pandas as pd
import pytest

import main
from qusynth import commands
from qusynth.commands import run_command, tolerated_ratio
from qusynth.config import merge_json, validate
from qusynth.errors import ConfigError
from qusynth.schemas import PulseSequence, TomographyData
from qusynth.storage import ResultStore, load_tomography_csv, tomography_frame


def read_table(path):
    return pd.read_csv(path, comment='#')


def test_decompose_writes_artifacts(config):
    config.command = 'decompose'
    assert main.execute(config) == 0

    out = config.output.dir
    csv = open(f'{out}/decompose.csv', encoding='utf-8').read()
    assert csv.startswith('# config: ')
    assert list(read_table(f'{out}/decompose.csv')['channel']) == ['AB', 'B', 'A']

    report = json.load(open(f'{out}/decompose.json', encoding='utf-8'))
    assert report['distance'] <= 1e-9
    seq = PulseSequence.from_text(open(f'{out}/sequence.txt', encoding='utf-8').read())
    assert seq.channels == ('AB', 'B', 'A')


def test_decompose_single_tone_identity(config):
    config.gate.name = 'identity'
    config.gate.scheme = 'single'
    result = commands.cmd_decompose(config)
    assert result.summary['channels'] == ['A', 'B', 'A']
    assert result.summary['distance'] <= 1e-9


def test_decompose_custom_entries(config):
    config.gate.entries = ['0', '1', '0', '1', '0', '0', '0', '0', '1j']
    assert commands.cmd_decompose(config).summary['target'] == 'entries'


def test_non_unitary_entries_exit_with_validation_code(config):
    config.command = 'decompose'
    config.gate.entries = ['1', '0', '0', '0', '2', '0', '0', '0', '1']
    assert main.execute(config) == 2


def test_recomposition_failure_exits_with_tolerance_code(config, monkeypatch):
    config.command = 'decompose'
    monkeypatch.setattr(commands, 'distance_mod_phase', lambda u, v: 1.0)
    assert main.execute(config) == 3


def test_missing_seed_for_noise_is_rejected(config):
    config.command = 'tomography'
    config.tomography.noise = 'multinomial'
    config.seed = None
    with pytest.raises(ConfigError):
        validate(config)
    assert main.execute(config) == 2



@pytest.mark.parametrize('section', ['scan', 'tomography', 'averaging'])
@pytest.mark.parametrize('value', [3, -1, 'two'])
def test_input_outside_basis_is_rejected(config, section, value):
    config.command = section
    config[section].input = value
    with pytest.raises(ConfigError):
        validate(config)
    assert main.execute(config) == 2


@pytest.mark.parametrize('key, value', [
    ('trap.sampling', 'grid'),
    ('stark.transitions', 'mirrored'),
    ('stark.clock', 'lab'),
    ('stark.rabi_hz', 0.0),
])
def test_unknown_stark_settings_are_rejected(config, key, value):
    config.command = 'stark'
    section, name = key.split('.')
    config[section][name] = value
    with pytest.raises(ConfigError):
        validate(config)
    assert main.execute(config) == 2


def test_scan_table(config):
    config.scan.points = 41
    result = commands.cmd_scan(config)
    assert result.summary['P1_at_t_AB'] <= 1e-9
    assert result.summary['t_AB'] == pytest.approx(2*math.pi/(2*math.pi*2000.0))

    frame = read_table(f'{config.output.dir}/scan.csv')
    assert list(frame.columns) == ['t', 'P0', 'P1', 'P2']
    np.testing.assert_allclose(frame[['P0', 'P1', 'P2']].sum(axis=1), 1.0, atol=1e-9)
    header = open(f'{config.output.dir}/scan.csv', encoding='utf-8').read()
    assert '# t_AB: ' in header


def test_detuning_table(config):
    config.drive.method = 'exact'
    config.detuning.points = 5
    result = commands.cmd_detuning(config)
    frame = read_table(f'{config.output.dir}/detuning.csv')
    assert set(frame['sequence']) == {'F_I', 'F_II'}
    resonant = frame[np.isclose(frame['ratio'], 0.0)]
    np.testing.assert_allclose(resonant['fidelity'], 1.0, atol=1e-6)
    assert set(result.summary['tolerated_ratio']) == {'F_I', 'F_II'}


def test_tolerated_ratio():
    ratios = np.array([-0.04, -0.02, 0.0, 0.02, 0.04])
    assert tolerated_ratio(ratios, np.array([0.98, 0.995, 1.0, 0.995, 0.991]), 0.99) == pytest.approx(0.02)
    assert tolerated_ratio(ratios, np.ones(5), 0.99) == pytest.approx(0.04)


def test_stark_rows(config):
    config.trap.samples = 40
    commands.cmd_stark(config)
    frame = read_table(f'{config.output.dir}/stark.csv')
    assert len(frame) == 6
    assert (frame['purity'] <= 1 + 1e-12).all()


def test_stark_with_tomography_round_trip(config):
    config.trap.samples = 40
    direct = commands.stark_rows(config)
    config.stark.tomography = True
    reconstructed = commands.stark_rows(config)
    for a, b in zip(direct, reconstructed):
        assert a.fidelity == pytest.approx(b.fidelity, abs=1e-3)


def test_tomography_of_ideal_fourier_output(config):
    result = commands.cmd_tomography(config)
    assert result.summary['fidelity'] >= 0.995

    report = json.load(open(f'{config.output.dir}/tomography.json', encoding='utf-8'))
    assert report['operator'] == 'F_II'
    assert len(report['report']['entries']) == 9


def test_tomography_from_mixed_data_file(config, tmp_path):
    data = TomographyData(fractions=[[1/3, 1/3, 1/3]]*6)
    path = tmp_path/'mixed.csv'
    tomography_frame(data).to_csv(path, index=False)
    config.tomography.data_path = str(path)

    commands.cmd_tomography(config)
    report = json.load(open(f'{config.output.dir}/tomography.json', encoding='utf-8'))
    entries = np.array([complex(*e) for e in report['report']['entries']]).reshape(3, 3)
    np.testing.assert_allclose(entries, np.eye(3)/3, atol=1e-12)


def test_tomography_csv_round_trip(config, tmp_path):
    rng = np.random.default_rng(0)
    fractions = rng.dirichlet(np.ones(3), size=6)
    data = TomographyData(fractions=fractions.tolist(), atoms=500)
    path = ResultStore(config).save_table('fractions', tomography_frame(data))
    (loaded,) = load_tomography_csv(path)
    np.testing.assert_allclose(loaded.fractions, data.fractions, atol=1e-11)
    assert loaded.atoms == 500


def test_noisy_tomography_is_byte_identical(config):
    config.command = 'tomography'
    config.tomography.noise = 'multinomial'
    config.tomography.max_iter = 200
    config.output.svg = True

    run_command(config)
    first = {name: open(f'{config.output.dir}/{name}', 'rb').read()
             for name in ('tomography_fractions.csv', 'tomography.json', 'tomography.svg')}
    run_command(config)
    for name, content in first.items():
        assert open(f'{config.output.dir}/{name}', 'rb').read() == content, name


def test_json_table_format(config):
    config.output.format = 'json'
    config.scan.points = 11
    commands.cmd_scan(config)
    payload = json.load(open(f'{config.output.dir}/scan.json', encoding='utf-8'))
    assert len(payload['rows']) == 11
    assert 't_AB' in payload['meta']


def test_averaging_table(config):
    config.averaging.scans = 3
    config.averaging.trials = 2
    config.averaging.atoms = 1000
    config.tomography.max_iter = 300
    commands.cmd_averaging(config)
    frame = read_table(f'{config.output.dir}/averaging.csv')
    assert list(frame['scans']) == [1, 2, 3]
    assert frame['residual_fidelity'].iloc[-1] == pytest.approx(0.0, abs=1e-15)


def test_config_file_merge_keeps_overrides(config, tmp_path):
    path = tmp_path/'run.json'
    path.write_text(json.dumps({'seed': 7, 'drive': {'rabi_hz': 1500.0}, 'extra': 1}), encoding='utf-8')
    config.seed = 11
    merge_json(config, path)
    assert config.seed == 11
    assert config.drive.rabi_hz == 1500.0
    assert config.extra == 1


def test_config_file_missing(config):
    with pytest.raises(ConfigError):
        merge_json(config, '/nonexistent/run.json')
