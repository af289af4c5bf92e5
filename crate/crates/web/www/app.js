import init, { reportCpt, biasSweep, severityDemo } from "./pkg/openprobe_web.js";

const $ = (id) => document.getElementById(id);
const fmt = (x) => (x === null ? "∞" : Number(x).toPrecision(6));

function table(header, rows) {
  const head = `<tr>${header.map((h) => `<th>${h}</th>`).join("")}</tr>`;
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table>${head}${body}</table>`;
}

function guard(out, fn) {
  try {
    out.innerHTML = fn();
  } catch (e) {
    out.innerHTML = `<p class="err">${e}</p>`;
  }
}

function showCpt() {
  guard($("cpt-out"), () => {
    const v = JSON.parse(reportCpt(Number($("cpt-p").value), Number($("cpt-b").value)));
    return (
      table(["symptom", "reported", "not reported"], [
        ["present", fmt(v.present[0]), fmt(v.present[1])],
        ["absent", fmt(v.absent[0]), fmt(v.absent[1])],
      ]) + `<p>likelihood ratio of no report: ${fmt(v.lambda_no_report)}</p>`
    );
  });
}

function bar(x, log) {
  const w = log ? Math.max(0, 1 + Math.log10(Math.max(x, 1e-6)) / 6) : x;
  return `<span class="bar" style="width:${(w * 120).toFixed(1)}px"></span> ${fmt(x)}`;
}

function runSweep() {
  guard($("sw-out"), () => {
    const biases = Float64Array.from($("sw-b").value.split(",").map(Number));
    const v = JSON.parse(biasSweep(Number($("sw-seed").value), $("sw-d").value.trim(), Number($("sw-p").value), biases));
    const log = $("sw-log").checked;
    const rows = v.rows.map((r) => [fmt(r.bias), ...r.presence.map((x) => bar(x, log))]);
    rows.push(["closed probe only", ...v.closed_probe_only.map((x) => bar(x, log))]);
    return `<p>reported: ${v.reported.join(", ")}</p>` + table(["B", ...v.disorders], rows);
  });
}

function runSeverity() {
  guard($("sev-out"), () => {
    const v = JSON.parse(severityDemo(Number($("sev-n").value), "quadratic"));
    const [heart, rash] = v.closed_form ?? [null, null];
    return table(["query", "grid", "continuum"], [
      ["P(heart attack | only rash reported)", fmt(v.heart_attack_given_rash), fmt(heart)],
      ["P(rash disease | only chest pain reported)", fmt(v.rash_disease_given_chest_pain), fmt(rash)],
    ]);
  });
}

await init();
for (const id of ["cpt-p", "cpt-b"]) $(id).addEventListener("input", showCpt);
$("sw-run").addEventListener("click", runSweep);
$("sw-log").addEventListener("change", runSweep);
$("sev-run").addEventListener("click", runSeverity);
showCpt();
runSweep();
runSeverity();
