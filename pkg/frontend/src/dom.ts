// Minimal DOM helpers; no framework, no virtual anything.

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export function fmtTime(epochS: number | null): string {
  if (epochS === null) return '-';
  return new Date(epochS * 1000).toLocaleTimeString();
}

export function banner(kind: 'error' | 'denied' | 'info', text: string): HTMLElement {
  return el('div', { class: `banner banner-${kind}`, role: 'alert' }, [text]);
}
