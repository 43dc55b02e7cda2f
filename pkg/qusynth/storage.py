"""ResultStore: CSV, JSON and SVG artifacts for qusynth runs."""
import json
from pathlib import Path

import pandas as pd
from ato.adict import ADict
from loguru import logger

from qusynth.config import to_plain
from qusynth.errors import ValidationError
from qusynth.schemas import TomographyData


class ResultStore:
    """
    Writes self-describing run artifacts.

    Structure:
      output_dir/
        {name}.csv     # table, preceded by '# ' lines holding the resolved config
        {name}.json    # structured report
        {name}.svg     # figure
    """

    def __init__(self, config: ADict):
        self._config = config
        self._out_path = Path(config.output.dir)
        self._header = json.dumps(to_plain(config), sort_keys=True, ensure_ascii=False)
        self._written: list[Path] = []
        self._ensure_dirs()

    def _ensure_dirs(self):
        self._out_path.mkdir(parents=True, exist_ok=True)

    @property
    def written(self) -> list[Path]:
        return list(self._written)

    def path(self, name: str) -> Path:
        return self._out_path/name

    def _record(self, path: Path):
        self._written.append(path)
        logger.info(f'Wrote {path}')

    def save_table(self, name: str, frame: pd.DataFrame, meta: dict | None = None) -> Path:
        """Table in the configured format; CSV carries the config (and meta) as comments."""
        if self._config.output.format == 'json':
            return self.save_json(name, {'meta': meta or {}, 'rows': frame.to_dict(orient='records')})

        path = self.path(f'{name}.csv')
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(f'# config: {self._header}\n')
            for key, value in sorted((meta or {}).items()):
                f.write(f'# {key}: {json.dumps(to_plain(value), sort_keys=True)}\n')
            frame.to_csv(f, index=False, float_format='%.12g', lineterminator='\n')
        self._record(path)
        return path

    def save_json(self, name: str, payload) -> Path:
        path = self.path(f'{name}.json')
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(to_plain(payload), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write('\n')
        self._record(path)
        return path

    def save_text(self, name: str, text: str) -> Path:
        path = self.path(name)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        self._record(path)
        return path

    def save_svg(self, name: str, figure) -> Path:
        from qusynth.plots import write_svg

        path = self.path(f'{name}.svg')
        write_svg(figure, path)
        self._record(path)
        return path


def tomography_frame(data: TomographyData, scan_id: int = 0) -> pd.DataFrame:
    """Columns: readout (1..6), j, fraction, N, scan."""
    rows = [
        {'readout': i + 1, 'j': j, 'fraction': f, 'N': data.atoms or 0, 'scan': scan_id}
        for i, row in enumerate(data.fractions)
        for j, f in enumerate(row)
    ]
    return pd.DataFrame(rows, columns=['readout', 'j', 'fraction', 'N', 'scan'])


def load_tomography_csv(path) -> list[TomographyData]:
    """Read tomography CSV back into one TomographyData per scan id."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f'Tomography data not found: {path}')
    frame = pd.read_csv(path, comment='#')
    missing = {'readout', 'j', 'fraction'} - set(frame.columns)
    if missing:
        raise ValidationError(f'Tomography CSV lacks columns {sorted(missing)}')
    if 'scan' not in frame.columns:
        frame['scan'] = 0

    datasets = []
    for _, group in frame.groupby('scan', sort=True):
        fractions = [[0.0]*3 for _ in range(6)]
        for row in group.itertuples(index=False):
            fractions[int(row.readout) - 1][int(row.j)] = float(row.fraction)
        atoms = int(group['N'].iloc[0]) if 'N' in group.columns and int(group['N'].iloc[0]) > 0 else None
        datasets.append(TomographyData(fractions=fractions, atoms=atoms))
    return datasets
