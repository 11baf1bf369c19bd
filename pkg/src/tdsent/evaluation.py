"""Metrics over predicted class indices.

Counting conventions: a zero denominator makes the affected precision,
recall or F1 exactly 0; macro-F1 is the unweighted mean over all classes;
the confusion matrix has gold classes as rows and predicted classes as
columns. The neutral-error fraction (how many mistakes involve the neutral
class on either side) is only meaningful for the 3-class task and is 0 when
there are no errors.
"""

from dataclasses import dataclass

from .corpus import CLASS_NAMES, NEUTRAL, NUM_CLASSES, label_to_class
from .errors import ValidationError


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    macro_f1: float
    confusion: tuple[tuple[int, ...], ...]  # [gold][predicted]
    neutral_error_fraction: float

    def to_text(self, class_names=CLASS_NAMES) -> str:
        names = list(class_names) if len(class_names) == len(self.f1) else [
            f"class {i}" for i in range(len(self.f1))]
        width = max(len(n) for n in names) + 2
        lines = [
            f"accuracy          {self.accuracy:.4f}",
            f"macro F1          {self.macro_f1:.4f}",
            f"neutral in errors {self.neutral_error_fraction:.4f}",
            "",
            f"{'':{width}}precision  recall     f1",
        ]
        for i, name in enumerate(names):
            lines.append(f"{name:{width}}{self.precision[i]:<11.4f}"
                         f"{self.recall[i]:<11.4f}{self.f1[i]:.4f}")
        lines.append("")
        lines.append("confusion (rows gold, columns predicted)")
        header = " ".join(f"{n:>{width}}" for n in names)
        lines.append(f"{'':{width}}{header}")
        for i, name in enumerate(names):
            row = " ".join(f"{c:>{width}}" for c in self.confusion[i])
            lines.append(f"{name:{width}}{row}")
        return "\n".join(lines)


def evaluate(predictions, golds, num_classes: int = NUM_CLASSES) -> EvalReport:
    """Score predicted class indices against gold class indices."""
    predictions = list(predictions)
    golds = list(golds)
    if len(predictions) != len(golds):
        raise ValidationError(
            f"{len(predictions)} predictions for {len(golds)} gold labels")
    if not predictions:
        raise ValidationError("cannot evaluate zero predictions")
    for value in predictions + golds:
        if not (0 <= value < num_classes):
            raise ValidationError(
                f"class index {value!r} outside 0..{num_classes - 1}")

    confusion = [[0] * num_classes for _ in range(num_classes)]
    for p, g in zip(predictions, golds):
        confusion[g][p] += 1

    n = len(predictions)
    correct = sum(confusion[c][c] for c in range(num_classes))
    precision, recall, f1 = [], [], []
    for c in range(num_classes):
        tp = confusion[c][c]
        predicted_c = sum(confusion[g][c] for g in range(num_classes))
        gold_c = sum(confusion[c])
        p = tp / predicted_c if predicted_c else 0.0
        r = tp / gold_c if gold_c else 0.0
        f = 2 * p * r / (p + r) if (p + r) else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(f)

    errors = n - correct
    if num_classes == NUM_CLASSES and errors:
        neutral_errors = sum(
            1 for p, g in zip(predictions, golds)
            if p != g and (p == NEUTRAL or g == NEUTRAL))
        neutral_fraction = neutral_errors / errors
    else:
        neutral_fraction = 0.0

    return EvalReport(
        accuracy=correct / n,
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        macro_f1=sum(f1) / num_classes,
        confusion=tuple(tuple(row) for row in confusion),
        neutral_error_fraction=neutral_fraction,
    )


def error_cases(instances, predictions, reference_predictions=None):
    """(instance, predicted_class, gold_class) for every misclassified
    instance, optionally narrowed to the cases some reference model got
    right (for side-by-side error reading)."""
    instances = list(instances)
    predictions = list(predictions)
    if len(instances) != len(predictions):
        raise ValidationError(
            f"{len(predictions)} predictions for {len(instances)} instances")
    if reference_predictions is not None:
        reference_predictions = list(reference_predictions)
        if len(reference_predictions) != len(instances):
            raise ValidationError(
                f"{len(reference_predictions)} reference predictions for "
                f"{len(instances)} instances")
    cases = []
    for i, (inst, pred) in enumerate(zip(instances, predictions)):
        gold = label_to_class(inst.label)
        if pred == gold:
            continue
        if reference_predictions is not None and reference_predictions[i] != gold:
            continue
        cases.append((inst, pred, gold))
    return cases
