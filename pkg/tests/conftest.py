"""Shared fixture builders for the test suite."""

from __future__ import annotations

import random

import pytest

from repocompose.model import (
    CompletionTarget,
    FileEntry,
    normalize_snapshot,
    snapshot_from_pairs,
)


def make_snapshot(pairs, repo="demo/repo", commit="c0", timestamp=1_500_000_000):
    return normalize_snapshot(snapshot_from_pairs(repo, commit, timestamp, pairs))


def make_target(path="pkg/new_module.py", content=None, repo="demo/repo", commit="c0",
                timestamp=1_500_000_000):
    if content is None:
        content = "def run_job(task):\n    return task.start()\n" * 8
    return CompletionTarget(repo=repo, commit=commit, timestamp=timestamp,
                            file=FileEntry(path, content))


def _py_file(index: int, rng: random.Random) -> tuple[str, str]:
    dirs = ["pkg", "pkg/core", "pkg/util", "tools", "tools/gen", "services/api"]
    path = f"{rng.choice(dirs)}/mod_{index:02d}.py"
    lines = [f'"""Helpers for unit {index}."""', ""]
    for fn in range(4):
        lines.append(f"def handler_{index}_{fn}(value, scale={fn + 1}):")
        lines.append(f"    # scale the incoming value for channel {fn}")
        lines.append(f"    total_{fn} = value * scale + {index}")
        lines.append(f"    return total_{fn}")
        lines.append("")
    lines.append(f"class Worker{index}:")
    lines.append(f"    def process(self, batch):")
    lines.append(f"        staged = [item + {index} for item in batch]")
    lines.append(f"        return staged")
    return path, "\n".join(lines) + "\n"


def _text_file(index: int, rng: random.Random) -> tuple[str, str]:
    kinds = [
        ("conf/settings_{i}.json", '{{"name": "unit-{i}", "retries": {i}, "enabled": true}}\n'),
        ("conf/deploy_{i}.yaml", "name: unit-{i}\nreplicas: {i}\nenabled: true\n"),
        ("scripts/run_{i}.sh", "#!/bin/sh\necho running unit {i}\nexit 0\n"),
        ("docs/guide_{i}.md", "# Guide {i}\n\nNotes about unit {i} and its setup steps.\n"),
        ("docs/notes_{i}.txt", "plain notes for unit {i}\nmore detail on unit {i}\n"),
    ]
    template_path, template_body = kinds[index % len(kinds)]
    body = template_body.format(i=index)
    filler = "".join(f"entry {index}-{line}: follow-up detail line\n" for line in range(8))
    if template_path.endswith(".json"):
        return template_path.format(i=index), body
    return template_path.format(i=index), body + filler


def make_synthetic_snapshot(n_py=30, n_text=20, seed=7, repo="demo/synth", commit="abc123"):
    """A mixed 50-file snapshot large enough to overflow small budgets."""
    rng = random.Random(seed)
    pairs = []
    for i in range(n_py):
        pairs.append(_py_file(i, rng))
    for i in range(n_text):
        pairs.append(_text_file(i, rng))
    return make_snapshot(pairs, repo=repo, commit=commit)


@pytest.fixture
def synthetic_snapshot():
    return make_synthetic_snapshot()


@pytest.fixture
def synthetic_target():
    return make_target(
        path="pkg/core/new_feature.py",
        content=(
            "def launch_feature(config):\n"
            "    state = config.copy()\n"
            "    state['ready'] = True\n"
            "    return state\n"
            "\n"
            "def retire_feature(config):\n"
            "    config['ready'] = False\n"
            "    return config\n"
            "\n"
            "class FeatureGate:\n"
            "    def check(self, name):\n"
            "        return name in self.names\n"
        ),
        repo="demo/synth",
        commit="abc123",
    )
