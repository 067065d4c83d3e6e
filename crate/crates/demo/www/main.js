import init, { schema_ladder, feature_weights, compare_estimators } from "./pkg/mbsmooth_demo.js";

const FEATURES = ["V", "N", "P", "N2"];
const $ = (id) => document.getElementById(id);
const weights = [0.03, 0.03, 0.10, 0.03];

function showError(e) {
  $("error").textContent = e ? String(e) : "";
}

function buildSliders() {
  const box = $("sliders");
  FEATURES.forEach((name, i) => {
    const label = document.createElement("label");
    const input = document.createElement("input");
    const value = document.createElement("span");
    input.type = "range";
    input.min = 0;
    input.max = 0.2;
    input.step = 0.005;
    input.value = weights[i];
    value.textContent = weights[i].toFixed(3);
    input.addEventListener("input", () => {
      weights[i] = Number(input.value);
      value.textContent = weights[i].toFixed(3);
      drawLadder();
    });
    label.append(`${name} `, input, " ", value);
    box.append(label);
  });
}

function drawLadder() {
  try {
    const out = JSON.parse(schema_ladder(FEATURES.join(","), weights.join(","), Number($("bins").value)));
    const ladder = $("ladder");
    ladder.replaceChildren();
    for (const step of out.steps) {
      const col = document.createElement("div");
      col.className = "step";
      const d = document.createElement("div");
      d.className = "d";
      d.textContent = `Δ = ${step.distance.toFixed(3)}`;
      col.append(d);
      for (const schema of step.schemata) {
        const row = document.createElement("div");
        row.className = "schema";
        for (const tok of schema.pattern) {
          const cell = document.createElement("span");
          cell.className = tok === "*" ? "cell wild" : "cell";
          cell.textContent = tok;
          row.append(cell);
        }
        col.append(row);
      }
      ladder.append(col);
    }
    showError();
  } catch (e) {
    showError(e);
  }
}

function bars(target, dist, extra) {
  const el = $(target);
  el.replaceChildren();
  for (const [label, p] of Object.entries(dist)) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.style.width = `${(100 * p).toFixed(1)}%`;
    const track = document.createElement("div");
    track.append(bar);
    row.append(label, track, p.toFixed(3));
    el.append(row);
  }
  if (extra) {
    const note = document.createElement("div");
    note.style.fontSize = ".75rem";
    note.textContent = extra;
    el.append(note);
  }
}

function compare() {
  const mode = $("weighting").value;
  const weighting = mode === "custom" ? $("custom").value : mode;
  try {
    const out = JSON.parse(
      compare_estimators($("train").value, $("query").value, Number($("k").value), $("voting").value, weighting),
    );
    bars("knn", out.knn.distribution, `label ${out.knn.label}`);
    const describe = (e) =>
      `label ${e.label}; step ${e.level} at Δ=${e.distance.toFixed(3)}: ` +
      e.schemata.map((s) => s.join(" ")).join(" | ");
    bars("naive", out.naive_backoff.distribution, describe(out.naive_backoff));
    bars("weighted", out.weighted_backoff.distribution, describe(out.weighted_backoff));
    const eq = out.equivalence;
    $("equivalence").innerHTML = eq.passed
      ? `<span class="ok">Naive Back-off equals the unweighted 1-NN vote (level ${eq.level}).</span>`
      : `<span class="bad">Mismatch: max difference ${eq.max_abs_diff}</span>`;
    $("groups").textContent = out.knn.groups
      .map((g) => `Δ=${g.distance.toFixed(3)}  vote weight ${g.vote_weight.toFixed(2)}\n  ` + g.members.join("\n  "))
      .join("\n");
    showError();
  } catch (e) {
    showError(e);
  }
}

function useIg() {
  try {
    const out = JSON.parse(feature_weights($("train").value));
    if (out.arity !== FEATURES.length) throw new Error("the ladder shows four features");
    out.information_gain.forEach((w, i) => (weights[i] = w));
    $("sliders").replaceChildren();
    buildSliders();
    drawLadder();
  } catch (e) {
    showError(e);
  }
}

await init();
buildSliders();
drawLadder();
compare();
$("bins").addEventListener("change", drawLadder);
for (const id of ["train", "query", "k", "voting", "weighting", "custom"]) {
  $(id).addEventListener("input", compare);
}
$("use-ig").addEventListener("click", useIg);
