/**
 * DOM rendering of a report view model: profile panel, probability gauge,
 * and the node-link neighborhood view.
 *
 * Every number shown is the text form of the payload value (String() gives
 * the shortest decimal that parses back to the same number); nothing is
 * rounded or reformatted. Node fill comes from the view model's color,
 * which in turn comes only from the risk flag.
 */

import { computeLayout } from "./layout.js";
import type { NodeView, ReportViewModel } from "./viewmodel.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const FILL: Record<NodeView["color"], string> = {
  red: "#c0392b",
  blue: "#2e6da4",
};
const GRAPH_WIDTH = 480;
const GRAPH_HEIGHT = 320;

function el(
  tag: string,
  className: string,
  text?: string,
): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function profilePanel(vm: ReportViewModel): HTMLElement {
  const panel = el("section", "profile");
  panel.append(el("h2", "profile__title", "Profile"));
  const rows: Array<[string, string, string]> = [
    ["name", "Name", vm.profile.name],
    ["account-id", "Account id", vm.accountId],
    ["followers", "Followers", String(vm.profile.followersCount)],
    ["following", "Following", String(vm.profile.followingCount)],
    ["description", "Description", vm.profile.description],
  ];
  const list = el("dl", "profile__list");
  for (const [key, label, value] of rows) {
    list.append(el("dt", "profile__label", label));
    const dd = el("dd", `profile__value profile__value--${key}`, value);
    dd.dataset["field"] = key;
    list.append(dd);
  }
  panel.append(list);
  return panel;
}

function gaugePanel(vm: ReportViewModel): HTMLElement {
  const panel = el("section", "gauge");
  panel.append(el("h2", "gauge__title", "Bot probability"));
  const bar = el("div", "gauge__bar");
  const fill = el("div", "gauge__fill");
  const percent = Math.min(Math.max(vm.probability, 0), 1) * 100;
  fill.style.width = `${percent}%`;
  bar.append(fill);
  panel.append(bar);
  const value = el("span", "gauge__value", vm.probabilityText);
  value.id = "gauge-value";
  panel.append(value);
  panel.append(
    el(
      "p",
      "gauge__verdict",
      `Predicted: ${vm.verdict} (model ${vm.modelVersion})`,
    ),
  );
  return panel;
}

function graphPanel(vm: ReportViewModel, layoutSeed: number): HTMLElement {
  const panel = el("section", "graph");
  panel.append(el("h2", "graph__title", "Neighborhood"));
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${GRAPH_WIDTH} ${GRAPH_HEIGHT}`);
  svg.setAttribute("width", String(GRAPH_WIDTH));
  svg.setAttribute("height", String(GRAPH_HEIGHT));
  svg.setAttribute("role", "img");
  const positions = computeLayout(
    vm.nodes.map((node) => node.id),
    vm.edges,
    { seed: layoutSeed, width: GRAPH_WIDTH, height: GRAPH_HEIGHT },
  );
  for (const edge of vm.edges) {
    const from = positions.get(edge.source)!;
    const to = positions.get(edge.target)!;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("class", "graph__edge");
    line.setAttribute("x1", String(from.x));
    line.setAttribute("y1", String(from.y));
    line.setAttribute("x2", String(to.x));
    line.setAttribute("y2", String(to.y));
    svg.append(line);
  }
  for (const node of vm.nodes) {
    const point = positions.get(node.id)!;
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("class", "graph__node");
    circle.setAttribute("cx", String(point.x));
    circle.setAttribute("cy", String(point.y));
    circle.setAttribute("r", node.isEgo ? "14" : "9");
    circle.setAttribute("fill", FILL[node.color]);
    circle.setAttribute("data-node-id", node.id);
    circle.setAttribute("data-color", node.color);
    circle.setAttribute("data-ego", node.isEgo ? "true" : "false");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${node.id}: ${node.probabilityText}`;
    circle.append(title);
    svg.append(circle);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("class", "graph__label");
    label.setAttribute("x", String(point.x));
    label.setAttribute("y", String(point.y + (node.isEgo ? 26 : 20)));
    label.setAttribute("text-anchor", "middle");
    label.textContent = node.id;
    svg.append(label);
  }
  panel.append(svg);
  return panel;
}

/** Replace `container`'s children with the rendered report. Runs only
 * after the payload projected cleanly, so there is never a partial view. */
export function renderReport(
  container: HTMLElement,
  vm: ReportViewModel,
  layoutSeed = 1337,
): void {
  container.replaceChildren(
    profilePanel(vm),
    gaugePanel(vm),
    graphPanel(vm, layoutSeed),
  );
}
