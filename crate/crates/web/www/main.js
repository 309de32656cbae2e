import init, { analyze, compare, synthetic } from "./pkg/rulegraph_web.js";

const $ = (id) => document.getElementById(id);

function setInfo(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.classList.toggle("error", isError);
}

// White to dark blue over [0, max].
function cellColor(value, max) {
  const t = max > 0 ? value / max : 0;
  const r = Math.round(255 - t * 196);
  const g = Math.round(255 - t * 145);
  const b = Math.round(255 - t * 87);
  return `rgb(${r}, ${g}, ${b})`;
}

function heatmap(view, relevant = []) {
  const table = document.createElement("table");
  table.className = "heat";
  const max = Math.max(0, ...view.matrix.flat());
  const head = table.insertRow();
  head.appendChild(document.createElement("th"));
  for (const f of view.features) {
    const th = document.createElement("th");
    th.textContent = f;
    if (relevant.includes(f)) th.className = "relevant";
    head.appendChild(th);
  }
  view.matrix.forEach((row, i) => {
    const tr = table.insertRow();
    const th = document.createElement("th");
    th.textContent = view.features[i];
    if (relevant.includes(view.features[i])) th.className = "relevant";
    tr.appendChild(th);
    for (const v of row) {
      const td = tr.insertCell();
      td.style.background = cellColor(v, max);
      td.style.color = max > 0 && v / max > 0.55 ? "#fff" : "#222";
      td.textContent = v >= 0.05 ? v.toFixed(1) : "";
      td.title = v.toFixed(4);
    }
  });
  return table;
}

function bars(view) {
  const box = document.createElement("div");
  box.className = "bars";
  const title = document.createElement("strong");
  title.textContent = "graph-centrality importance";
  box.appendChild(title);
  const max = Math.max(1e-12, ...view.ranking.map((r) => r.score));
  for (const r of view.ranking) {
    const row = document.createElement("div");
    row.className = "bar-row";
    const name = document.createElement("span");
    name.className = "name";
    name.textContent = r.feature;
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.style.width = `${(12 * r.score) / max}rem`;
    const val = document.createElement("span");
    val.textContent = r.score.toFixed(2);
    row.append(name, bar, val);
    box.appendChild(row);
  }
  return box;
}

function render(target, view, relevant = []) {
  target.replaceChildren(heatmap(view, relevant), bars(view));
}

function runSynthetic() {
  try {
    const out = JSON.parse(
      synthetic(
        $("synth-mode").value,
        Number($("synth-r").value),
        Number($("synth-seed").value),
        Number($("synth-depth").value),
        Number($("synth-n").value),
      ),
    );
    render($("synth-result"), out.graph, out.relevant);
    const n = out.rules.trim().split("\n").length;
    setInfo(
      "synth-info",
      `${n} rules, training accuracy ${(100 * out.train_accuracy).toFixed(1)}%; relevant features highlighted: ${out.relevant.join(", ")}`,
    );
    $("an-csv").value = out.csv;
    $("an-target").value = out.target;
    $("an-rules").value = out.rules;
    $("cmp-a").value = out.rules;
    if (!$("cmp-b").value.trim()) {
      $("cmp-b").value = out.rules.split("\n").slice(0, 2).join("\n");
    }
  } catch (e) {
    setInfo("synth-info", String(e), true);
  }
}

function runAnalyze() {
  try {
    const view = JSON.parse(analyze($("an-csv").value, $("an-target").value, $("an-rules").value, $("an-class").value));
    render($("an-result"), view);
    $("an-dot").textContent = view.dot;
    setInfo("an-info", view.zero ? "no rule carries positive relevance: the graph is empty" : "");
  } catch (e) {
    $("an-result").replaceChildren();
    setInfo("an-info", String(e), true);
  }
}

function runCompare() {
  try {
    const out = JSON.parse(
      compare($("an-csv").value, $("an-target").value, $("cmp-a").value, $("cmp-b").value, $("an-class").value),
    );
    setInfo("cmp-info", `distance ${out.distance.toFixed(4)}`);
    const a = document.createElement("div");
    const b = document.createElement("div");
    a.appendChild(heatmap(out.a));
    b.appendChild(heatmap(out.b));
    $("cmp-result").replaceChildren(a, b);
  } catch (e) {
    $("cmp-result").replaceChildren();
    setInfo("cmp-info", String(e), true);
  }
}

await init();
$("synth-run").addEventListener("click", runSynthetic);
$("an-run").addEventListener("click", runAnalyze);
$("cmp-run").addEventListener("click", runCompare);
runSynthetic();
runAnalyze();
