"""Regenerates the bundled fixtures in ../fixtures."""
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
SIDE = 28
CATEGORIES = [{"id": 1, "name": "car"}]


def rle(bits, h, w):
    # column-major, first run is background
    flat = [bits[r][c] for c in range(w) for r in range(h)]
    counts, cur, run = [], 0, 0
    for b in flat:
        if b == cur:
            run += 1
        else:
            counts.append(run)
            cur, run = b, 1
    counts.append(run)
    return counts


def rect(h, w, r0, r1, c0, c1):
    return [[1 if r0 <= r < r1 and c0 <= c < c1 else 0 for c in range(w)] for r in range(h)]


def annotation(i, image_id, x, y, bw, bh, bits, h, w):
    return {
        "id": i,
        "image_id": image_id,
        "category_id": 1,
        "bbox": [x, y, bw, bh],
        "area": sum(map(sum, bits)),
        "segmentation": {"size": [h, w], "counts": rle(bits, h, w)},
    }


def labeled():
    # 3 images, 6 cars; each mask covers the left half of its 8x8 box
    images = [{"id": k, "height": 32, "width": 32} for k in (1, 2, 3)]
    anns = []
    for k, image_id in enumerate((1, 1, 2, 2, 3, 3)):
        x, y = (2, 4) if k % 2 == 0 else (18, 16)
        bits = rect(32, 32, y, y + 8, x, x + 4)
        anns.append(annotation(k + 1, image_id, x, y, 8, 8, bits, 32, 32))
    return {"images": images, "categories": CATEGORIES, "annotations": anns}


BANDS = [(5, 0.9), (5, 0.8), (4, 0.6), (5, 0.4), (5, 0.2), (4, 0.1)]


def band_probs():
    row = [p for n, p in BANDS for _ in range(n)]
    return [v for _ in range(SIDE) for v in row]


def predictions():
    images = [{"id": 10, "height": 48, "width": 64}, {"id": 11, "height": 48, "width": 64}]
    scores = [(10, 0.95), (11, 0.9), (10, 0.8), (11, 0.6), (10, 0.55), (11, 0.4), (10, 0.3)]
    dets = []
    for k, (image_id, s) in enumerate(scores):
        x, y = 4 + 7 * k, 6 + 4 * (k % 3)
        dets.append({
            "image_id": image_id,
            "category_id": 1,
            "score": s,
            "bbox": [x, y, 14, 14],
            "mask": {"size": [SIDE, SIDE], "probs": band_probs()},
        })
    return {"images": images, "categories": CATEGORIES, "detections": dets}


def eval_pair():
    images = [{"id": 1, "height": 8, "width": 8}]
    gt = [rect(8, 8, 0, 4, 0, 2), rect(8, 8, 5, 8, 5, 8)]
    # first prediction shares one of the two ground-truth columns: IoU 4/12
    pred = [rect(8, 8, 0, 4, 1, 3), rect(8, 8, 5, 8, 5, 8)]
    boxes_gt = [(0, 0, 2, 4), (5, 5, 3, 3)]
    boxes_pred = [(1, 0, 2, 4), (5, 5, 3, 3)]

    def doc(masks, boxes):
        anns = [annotation(i + 1, 1, *b, m, 8, 8) for i, (m, b) in enumerate(zip(masks, boxes))]
        return {"images": images, "categories": CATEGORIES, "annotations": anns}

    return doc(pred, boxes_pred), doc(gt, boxes_gt)


def write(name, doc):
    (OUT / name).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    write("labeled.json", labeled())
    preds = predictions()
    write("predictions.json", preds)
    write("images.json", {"images": preds["images"]})
    pred, gt = eval_pair()
    write("eval_pred.json", pred)
    write("eval_gt.json", gt)
