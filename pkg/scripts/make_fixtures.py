"""Regenerate the bundled demonstration corpus (10 records on T1, 10 on T1b)."""
from importlib import resources
from pathlib import Path

from pathxai.demos import PolicySpec, generate_demonstrations, merge
from pathxai.graph import load_topology

SEED = 7


def main() -> None:
    data = Path(str(resources.files("pathxai") / "data"))
    t1 = load_topology(data / "t1_training.json")
    t1b = load_topology(data / "t1b_training.json")
    ds = merge(
        generate_demonstrations(t1, PolicySpec(), 10, SEED),
        generate_demonstrations(t1b, PolicySpec(), 10, SEED),
        seed=SEED,
    )
    (data / "corpus_fixture.json").write_text(ds.dumps())


if __name__ == "__main__":
    main()
