"""
Export synthetic few-shot datasets as COCO-style files.

For every seed, writes the scenes as an annotation file plus one split file per
K, and a metadata.json with the synthetic missing rates. Running the
missing-rate auditor on the exported files reproduces those rates exactly:

    python -m src.cli missing-rate data/synthetic/seed_0/annotations.json \
        data/synthetic/seed_0/split_1shot.json
"""

import json
import sys
from datetime import datetime
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from src.annotations.coco_io import dump_annotations, dump_split
from src.annotations.missing_rate import ClassScope
from src.config import SimConfig, settings
from src.pipeline.seeding import stream_rng
from src.simulation.fewshot import export_synthetic_dataset, generate_scenes, make_fewshot_split, synthetic_missing_rate

SYNTHETIC_DIR = Path(settings.synthetic_data_dir)

SEEDS = [0, 1, 2]
SHOTS = [1, 2, 3, 5, 10]
CONFIG = SimConfig(num_fg_classes=5, num_base_classes=2)


def export_seed(seed: int):
    """Write the annotation file, the K-shot splits and the metadata of one seed."""
    seed_dir = SYNTHETIC_DIR / f"seed_{seed}"
    seed_dir.mkdir(parents=True, exist_ok=True)
    print(f"\n  Exporting seed {seed} to {seed_dir}")

    scenes = generate_scenes(CONFIG, stream_rng(seed, "scenes"))
    fsod = ClassScope.build("novel-only", CONFIG.base_classes, CONFIG.novel_classes)
    gfsod = ClassScope.build("base-plus-novel", CONFIG.base_classes, CONFIG.novel_classes)

    rates = {}
    for k in SHOTS:
        split = make_fewshot_split(scenes, k, stream_rng(seed, "split"), CONFIG.num_fg_classes)
        aset, split_spec = export_synthetic_dataset(scenes, split, CONFIG.num_fg_classes)
        if k == SHOTS[0]:
            dump_annotations(aset, seed_dir / "annotations.json")
            print(f"    [OK] annotations.json: {len(aset.images)} images, {len(aset.annotations)} annotations")
        dump_split(split_spec, seed_dir / f"split_{k}shot.json")
        rates[k] = {
            "fsod": synthetic_missing_rate(scenes, split, fsod).rate,
            "gfsod": synthetic_missing_rate(scenes, split, gfsod).rate,
        }
        print(f"    [OK] split_{k}shot.json: fsod {rates[k]['fsod']:.3f}, gfsod {rates[k]['gfsod']:.3f}")

    metadata = {
        "seed": seed,
        "config": CONFIG.model_dump(mode="json"),
        # exported category ids are class index + 1
        "base_category_ids": [c + 1 for c in CONFIG.base_classes],
        "novel_category_ids": [c + 1 for c in CONFIG.novel_classes],
        "missing_rates": {str(k): v for k, v in rates.items()},
        "generated_at": datetime.now().isoformat(),
    }
    with open(seed_dir / "metadata.json", "w", encoding="utf-8") as f:
        json.dump(metadata, f, indent=2)
    print(f"    [OK] metadata.json")


def main():
    print("=" * 70)
    print("EXPORTING SYNTHETIC FEW-SHOT DATASETS")
    print("=" * 70)
    print(f"Output directory: {SYNTHETIC_DIR.absolute()}")

    for seed in SEEDS:
        export_seed(seed)

    print("\n" + "=" * 70)
    print("[OK] All synthetic datasets exported")
    print("=" * 70)


if __name__ == "__main__":
    main()
