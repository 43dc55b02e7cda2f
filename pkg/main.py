"""qusynth entry point.

    python main.py decompose
    python main.py stark quick seed=7
    python main.py tomography noisy output.dir=./runs/noisy
"""
import sys

from loguru import logger

from qusynth import scope
from qusynth.commands import run_command
from qusynth.config import merge_json, validate
from qusynth.errors import QusynthError


def execute(config) -> int:
    """Run the configured command and map failures onto exit codes."""
    try:
        if config.config_path:
            merge_json(config, config.config_path)
        validate(config)
        result = run_command(config)
    except QusynthError as e:
        logger.error(f'{type(e).__name__}: {e}')
        return e.exit_code
    except Exception as e:
        logger.exception(f'Unexpected failure: {e}')
        return 1

    print('=' * 60)
    print(f'[{result.command}] done')
    for key, value in result.summary.items():
        print(f'  {key}: {value}')
    for path in result.artifacts:
        print(f'  -> {path}')
    print('=' * 60)
    return 0


@scope
def main(config):
    sys.exit(execute(config))


if __name__ == '__main__':
    main()
