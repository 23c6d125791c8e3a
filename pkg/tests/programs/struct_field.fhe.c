// Dot product of two small vectors held in structs.
struct V {
    u3 x;
    u3 y;
};

u7 dot(V p, V q) {
    return (u7)p.x * (u7)q.x + (u7)p.y * (u7)q.y;
}

u7 main(V p, V q) {
    return dot(p, q);
}
