import init, { renderScene, readFrame, benchmarkReport } from "./pkg/scaleread_web.js";

const $ = (id) => document.getElementById(id);
const canvas = $("canvas");
const ctx = canvas.getContext("2d", { willReadFrequently: true });
const FULL_SCALE = { syringe: 4, cylinder: 50 };
const MINOR = { syringe: 0.2, cylinder: 1 };

let scene = null;

function levelValue() {
  const preset = $("preset").value;
  const step = MINOR[preset];
  return Math.round((Number($("level").value) * FULL_SCALE[preset]) / step) * step;
}

function syncLabels() {
  $("level-out").textContent = levelValue().toFixed(1);
  $("rotation-out").textContent = `${$("rotation").value}°`;
  $("scale-out").textContent = `${Number($("scale").value).toFixed(2)}×`;
  $("noise-out").textContent = $("noise").value;
}

function render() {
  const s = renderScene(
    $("preset").value,
    levelValue(),
    Number($("rotation").value),
    Number($("scale").value),
    Number($("noise").value),
    Number($("seed").value) >>> 0,
  );
  scene = { level: s.level, minorStep: s.minorStep, indicator: s.indicator };
  canvas.width = s.width;
  canvas.height = s.height;
  ctx.putImageData(new ImageData(new Uint8ClampedArray(s.rgba()), s.width, s.height), 0, 0);
  s.free();
  $("result").textContent = `rendered at ${scene.level.toFixed(2)}`;
}

function read() {
  const { width, height } = canvas;
  const rgba = ctx.getImageData(0, 0, width, height).data;
  const indicator = scene ? scene.indicator : $("preset").value === "cylinder" ? "meniscus" : "plunger";
  const r = JSON.parse(readFrame(new Uint8Array(rgba.buffer), width, height, indicator));
  const out = $("result");
  out.replaceChildren();
  const head = document.createElement("p");
  if (r.ok) {
    head.innerHTML = `<strong>${r.value.toFixed(3)}</strong> (${r.confidence} confidence)`;
    if (scene) {
      const err = r.value - scene.level;
      const ok = Math.abs(err) <= scene.minorStep / 2 + 1e-9;
      head.innerHTML += ` <span class="${ok ? "good" : "bad"}">truth ${scene.level.toFixed(2)}, error ${err.toFixed(3)}</span>`;
    }
  } else {
    head.innerHTML = `<span class="bad">failed at ${r.stage}: ${r.error}</span>`;
  }
  out.append(head);
  const info = document.createElement("p");
  const rot = r.rotation == null ? "n/a" : `${r.rotation.toFixed(2)}°`;
  info.textContent = r.ok
    ? `value = ${r.slope} × y + ${r.offset.toFixed(4)}; frame rotated ${rot}`
    : `frame rotated ${rot}`;
  out.append(info);
  if (r.labels.length) {
    const t = document.createElement("table");
    t.innerHTML = "<tr><th>row</th><th>OCR text</th><th>read</th><th>corrected</th></tr>";
    for (const l of r.labels) {
      const fixed = l.read !== l.corrected && l.corrected != null;
      t.insertAdjacentHTML(
        "beforeend",
        `<tr><td>${l.position.toFixed(1)}</td><td>${l.text || "–"}</td><td>${l.read ?? "–"}</td>` +
          `<td class="${fixed ? "bad" : ""}">${l.corrected ?? "–"}</td></tr>`,
      );
    }
    out.append(t);
  }
}

function loadPhoto(file) {
  const img = new Image();
  img.onload = () => {
    canvas.width = img.naturalWidth;
    canvas.height = img.naturalHeight;
    ctx.drawImage(img, 0, 0);
    URL.revokeObjectURL(img.src);
    scene = null;
    $("result").textContent = "photo loaded";
  };
  img.src = URL.createObjectURL(file);
}

function report() {
  const r = JSON.parse(benchmarkReport());
  const pre = document.createElement("pre");
  pre.textContent = r.table;
  $("table").replaceChildren(pre);
  $("plots").replaceChildren(
    ...r.plots.map(([name, svg]) => {
      const fig = document.createElement("figure");
      fig.innerHTML = svg;
      fig.setAttribute("aria-label", name);
      return fig;
    }),
  );
}

await init();
for (const id of ["level", "rotation", "scale", "noise", "preset"]) {
  $(id).addEventListener("input", syncLabels);
}
$("preset").addEventListener("change", render);
$("render").addEventListener("click", render);
$("read").addEventListener("click", read);
$("report").addEventListener("click", report);
$("file").addEventListener("change", (e) => e.target.files[0] && loadPhoto(e.target.files[0]));
syncLabels();
render();
